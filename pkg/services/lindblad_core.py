"""
Lindblad 主方程的直接时间积分

    dρ/dt = −i[Ĥ, ρ] + (μ/2)(2âρâ† − â†âρ − ρâ†â) + (ν/2)(2â†ρâ − ââ†ρ − ρââ†)
    Ĥ = ω(â†â + 1/2) − f(t)(â† + â)

泵浦项中的 ââ† 取 n̂ + 1, 使直接生成元与超算符生成元在任何截断下逐元相等。
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import RK45

from services.errors import DomainError, IntegrationError, ShapeError, TruncationWarning
from services.fock import DensityMatrix, FockOperators, Tolerances, build_ladder_ops

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ZeroForce:
    """f(t) ≡ 0"""

    def value(self, t: float) -> float:
        return 0.0


@dataclass(frozen=True)
class HarmonicForce:
    """f(t) = f0 cos(Ωt); Ω = 0 为常力"""
    f0: float
    Omega: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.f0) and math.isfinite(self.Omega)):
            raise DomainError(f"驱动参数必须有限: f0={self.f0}, Omega={self.Omega}")
        if self.Omega < 0:
            raise DomainError(f"驱动频率 Omega 必须非负, 得到 {self.Omega}")

    def value(self, t: float) -> float:
        return self.f0 * math.cos(self.Omega * t)


@dataclass(frozen=True)
class SampledForce:
    """采样驱动, 样本之间线性插值, 网格之外保持端点值"""
    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(x) for x in self.times)
        values = tuple(float(x) for x in self.values)
        if len(times) < 2:
            raise DomainError(f"采样驱动至少需要 2 个样本点, 得到 {len(times)}")
        if len(times) != len(values):
            raise DomainError(f"采样时间 ({len(times)}) 与取值 ({len(values)}) 个数不一致")
        if np.any(np.diff(times) <= 0):
            raise DomainError("采样时间必须严格递增")
        if not np.all(np.isfinite(values)):
            raise DomainError("采样驱动取值必须有限")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def value(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


ForceSpec = Union[ZeroForce, HarmonicForce, SampledForce]


@dataclass(frozen=True)
class OscillatorParams:
    """振子参数 ω, μ, ν 与外力"""
    omega: float
    mu: float
    nu: float
    force: ForceSpec = field(default_factory=ZeroForce)

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega 必须为正, 得到 {self.omega}")
        if self.nu < 0:
            raise DomainError(f"nu 必须非负, 得到 {self.nu}")
        if not self.mu > self.nu:
            raise DomainError(f"requires mu > nu (mu={self.mu}, nu={self.nu})")

    @property
    def gamma(self) -> float:
        return 0.5 * (self.mu - self.nu)

    @property
    def gamma_prime(self) -> float:
        return 0.5 * (self.mu + self.nu)

    def f(self, t: float) -> float:
        return self.force.value(t)


@dataclass(frozen=True)
class StepControl:
    """自适应步长控制"""
    rtol: float = 1e-10
    atol: float = 1e-12
    first_step: Optional[float] = None
    max_step: float = np.inf
    tail_tol: float = 1e-10


@dataclass(frozen=True)
class StepRecord:
    t: float
    step_size: float
    trace_error: float
    herm_defect: float
    local_error: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """网格点上的态序列与逐步诊断"""
    times: np.ndarray
    states: List[DensityMatrix]
    diagnostics: List[StepRecord]

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ShapeError(f"时间点 ({len(self.times)}) 与态 ({len(self.states)}) 个数不一致")

    @property
    def error_estimate(self) -> float:
        """累计局部误差估计"""
        return float(sum(record.local_error for record in self.diagnostics))

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def _matrix_of(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)


def hamiltonian(params: OscillatorParams, t: float, ops: FockOperators) -> np.ndarray:
    """Ĥ = ω(n̂ + 1/2) − f(t)(â† + â)"""
    f_t = params.f(t)
    return params.omega * (ops.number + 0.5 * ops.identity) - f_t * (ops.raising + ops.lowering)


def dissipator_diagonal(params: OscillatorParams, ops: FockOperators) -> np.ndarray:
    """生成元中逐元相乘的部分 M, 即 rhs = M∘ρ + μâρâ† + νâ†ρâ + if[X, ρ]"""
    n_row = ops.levels[:, None]
    n_col = ops.levels[None, :]
    return (-1j * params.omega * (n_row - n_col)
            - 0.5 * params.mu * (n_row + n_col)
            - 0.5 * params.nu * (n_row + n_col + 2.0))


def _rhs_matrix(R: np.ndarray, params: OscillatorParams, t: float,
                ops: FockOperators, diagonal: np.ndarray) -> np.ndarray:
    a, a_dag = ops.lowering, ops.raising
    out = diagonal * R
    out += params.mu * (a @ R @ a_dag)
    out += params.nu * (a_dag @ R @ a)
    f_t = params.f(t)
    if f_t != 0.0:
        X = a + a_dag
        out += 1j * f_t * (X @ R - R @ X)
    return out


def lindblad_rhs(rho: Union[DensityMatrix, np.ndarray], params: OscillatorParams,
                 t: float, ops: FockOperators) -> np.ndarray:
    """主方程右端项"""
    R = _matrix_of(rho)
    if R.shape != (ops.dim, ops.dim):
        raise ShapeError(f"密度矩阵形状 {R.shape} 与截断维数 {ops.dim} 不符")
    return _rhs_matrix(R, params, t, ops, dissipator_diagonal(params, ops))


def validate_grid(t_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("时间网格必须是非空一维序列")
    if grid[0] != 0.0:
        raise DomainError(f"时间网格必须从 0 开始, 得到 {grid[0]}")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("时间网格必须严格递增")
    return grid


def march(fun: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray,
          t_grid: Sequence[float], control: StepControl, dim: int) -> Trajectory:
    """用 RK45 逐区间推进, 精确落在每个网格点上"""
    grid = validate_grid(t_grid)
    y = np.asarray(y0, dtype=complex).reshape(-1).copy()
    states = [DensityMatrix(dim=dim, data=y.reshape(dim, dim))]
    diagnostics: List[StepRecord] = []
    h_hint = control.first_step

    for t_start, t_stop in zip(grid[:-1], grid[1:]):
        interval = t_stop - t_start
        first_step = None if h_hint is None else min(h_hint, interval)
        solver = RK45(fun, t_start, y, t_bound=t_stop, first_step=first_step,
                      max_step=control.max_step, rtol=control.rtol, atol=control.atol)
        while solver.status == 'running':
            message = solver.step()
            if solver.status == 'failed':
                logger.error(f"积分失败: {message}")
                raise IntegrationError(f"步长下溢, 积分失败: {message}", solver.t)
            step_size = solver.step_size
            local_error = float(np.max(np.abs(solver.K.T @ solver.E))) * step_size
            current = solver.y.reshape(dim, dim)
            diagnostics.append(StepRecord(
                t=float(solver.t),
                step_size=float(step_size),
                trace_error=float(abs(np.trace(current) - 1.0)),
                herm_defect=float(np.max(np.abs(current - current.conj().T))),
                local_error=local_error,
            ))
            if solver.t < t_stop:
                h_hint = solver.h_abs
        y = solver.y.copy()
        states.append(DensityMatrix(dim=dim, data=y.reshape(dim, dim)))

    trajectory = Trajectory(times=grid, states=states, diagnostics=diagnostics)
    worst_tail = max(state.tail_population for state in states)
    if worst_tail > control.tail_tol:
        logger.warning(f"轨迹尾部布居 {worst_tail:.3e} 超过容差 {control.tail_tol:.1e}")
        warnings.warn(TruncationWarning(f"截断维数 {dim} 可能不足", worst_tail), stacklevel=3)
    return trajectory


def integrate(rho0: DensityMatrix, params: OscillatorParams, t_grid: Sequence[float],
              control: StepControl = StepControl(),
              ops: Optional[FockOperators] = None) -> Trajectory:
    """直接积分主方程 (不做迹重归一化)"""
    ops = ops or build_ladder_ops(rho0.dim)
    if ops.dim != rho0.dim:
        raise ShapeError(f"初态维数 {rho0.dim} 与算符维数 {ops.dim} 不符")
    rho0.check(Tolerances(tail_tol=control.tail_tol))
    dim = ops.dim
    diagonal = dissipator_diagonal(params, ops)

    def fun(t: float, y: np.ndarray) -> np.ndarray:
        return _rhs_matrix(y.reshape(dim, dim), params, t, ops, diagonal).reshape(-1)

    logger.info(f"开始直接积分: N={dim}, t_max={t_grid[-1]}, 网格点 {len(t_grid)}")
    return march(fun, rho0.data, t_grid, control, dim)
