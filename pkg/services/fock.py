"""
截断 Fock 空间上的数值基础

所有算符都是 N×N 稠密复矩阵, 基矢编号从 0 开始: |0⟩, |1⟩, ..., |N-1⟩。
向量化采用行优先顺序 (x_00, x_01, ..., x_10, ...),
因此 vec(A X B) = kron(A, B^T) vec(X)。
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from services.errors import DomainError, InvalidDimensionError, ShapeError, TruncationWarning

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Tolerances:
    """物理态检查的容差"""
    herm_tol: float = 1e-10
    trace_tol: float = 1e-10
    pos_tol: float = 1e-8
    tail_tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class FockOperators:
    """截断维数 N 下的 â, â†, n̂ 与单位矩阵"""
    dim: int
    lowering: np.ndarray
    raising: np.ndarray
    number: np.ndarray
    identity: np.ndarray

    @property
    def levels(self) -> np.ndarray:
        """n̂ 的对角元 0, 1, ..., N-1"""
        return np.arange(self.dim, dtype=float)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """密度矩阵 ρ (构造后不可变)"""
    dim: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape != (self.dim, self.dim):
            raise ShapeError(f"密度矩阵形状 {data.shape} 与维数 {self.dim} 不符")
        object.__setattr__(self, 'data', _frozen(data))

    @classmethod
    def from_array(cls, data: np.ndarray) -> "DensityMatrix":
        data = np.asarray(data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ShapeError(f"密度矩阵必须是方阵, 得到 {data.shape}")
        return cls(dim=data.shape[0], data=data)

    @property
    def herm_defect(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    @property
    def trace_error(self) -> float:
        return float(abs(np.trace(self.data) - 1.0))

    @property
    def min_eigenvalue(self) -> float:
        hermitized = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(hermitized)[0])

    @property
    def tail_population(self) -> float:
        return float(self.data[-1, -1].real)

    def check(self, tolerances: Tolerances = Tolerances()) -> "DensityMatrix":
        """检查物理态不变量; 尾部布居超限只发出警告"""
        if self.herm_defect > tolerances.herm_tol:
            raise DomainError(f"密度矩阵非厄米: 偏差 {self.herm_defect:.3e}")
        if self.trace_error > tolerances.trace_tol:
            raise DomainError(f"密度矩阵迹不为 1: 偏差 {self.trace_error:.3e}")
        if self.min_eigenvalue < -tolerances.pos_tol:
            raise DomainError(f"密度矩阵非正定: 最小本征值 {self.min_eigenvalue:.3e}")
        warn_if_truncated(self, tolerances.tail_tol)
        return self


def warn_if_truncated(rho: DensityMatrix, tail_tol: float) -> None:
    """尾部布居超过 tail_tol 时发出 TruncationWarning"""
    tail = rho.tail_population
    if tail > tail_tol:
        logger.warning(f"截断维数 {rho.dim} 可能不足, 尾部布居 {tail:.3e} > {tail_tol:.1e}")
        warnings.warn(TruncationWarning(f"截断维数 {rho.dim} 可能不足", tail), stacklevel=3)


def build_ladder_ops(N: int) -> FockOperators:
    """构造截断的升降算符"""
    if not isinstance(N, (int, np.integer)) or N < 2:
        raise InvalidDimensionError(f"截断维数必须为不小于 2 的整数, 得到 {N!r}")
    N = int(N)
    lowering = np.diag(np.sqrt(np.arange(1, N, dtype=float)), k=1).astype(complex)
    return FockOperators(
        dim=N,
        lowering=_frozen(lowering),
        raising=_frozen(lowering.conj().T),
        number=_frozen(np.diag(np.arange(N, dtype=float))),
        identity=_frozen(np.eye(N)),
    )


def _require_square(name: str, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"{name} 必须是方阵, 得到形状 {matrix.shape}")
    return matrix


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker 积, (A⊗B)[i*n+k, j*n+l] = A[i,j] B[k,l]"""
    return np.kron(_require_square("A", A), _require_square("B", B))


def vec(X: np.ndarray) -> np.ndarray:
    """行优先展开"""
    return _require_square("X", X).reshape(-1).copy()


def unvec(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1:
        raise ShapeError(f"unvec 需要一维向量, 得到形状 {x.shape}")
    n = math.isqrt(x.size)
    if n * n != x.size:
        raise ShapeError(f"向量长度 {x.size} 不是完全平方数")
    return x.reshape(n, n).copy()


def displacement(alpha: complex, ops: FockOperators) -> np.ndarray:
    """位移算符 D(α) = exp(α â† − α* â)"""
    alpha = complex(alpha)
    if alpha == 0:
        return np.array(ops.identity)
    return expm(alpha * ops.raising - alpha.conjugate() * ops.lowering)


def truncation_leakage(matrix: np.ndarray) -> float:
    """截断泄漏: 最后一行与最后一列 2-范数的较大者"""
    matrix = _require_square("matrix", matrix)
    return float(max(np.linalg.norm(matrix[-1, :]), np.linalg.norm(matrix[:, -1])))


def fock_state(n: int, ops: FockOperators) -> DensityMatrix:
    if not 0 <= n < ops.dim:
        raise DomainError(f"Fock 态 |{n}⟩ 超出截断维数 {ops.dim}")
    data = np.zeros((ops.dim, ops.dim), dtype=complex)
    data[n, n] = 1.0
    return DensityMatrix(dim=ops.dim, data=data)


def coherent_state(alpha: complex, ops: FockOperators) -> DensityMatrix:
    """相干态 |α⟩⟨α|, |α⟩ 取 D(α) 的第 0 列"""
    psi = displacement(alpha, ops)[:, 0]
    return DensityMatrix(dim=ops.dim, data=np.outer(psi, psi.conj()))


def thermal_state(u: float, ops: FockOperators) -> DensityMatrix:
    """热态 (1-u) u^n, 不做截断重归一化"""
    if not 0.0 <= u < 1.0:
        raise DomainError(f"热态参数 u 必须在 [0, 1) 内, 得到 {u}")
    populations = (1.0 - u) * u ** ops.levels
    return DensityMatrix(dim=ops.dim, data=np.diag(populations))
