import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from services.errors import ShapeError
from services.fock import DensityMatrix, FockOperators

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObservableReport:
    """单个时刻的观测量与诊断"""
    t: float
    mean_n: float
    mean_a: complex
    purity: float
    trace_err: float
    herm_defect: float
    min_eig: float
    tail_pop: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _same_shape(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape or A.ndim != 2:
        raise ShapeError(f"矩阵形状不匹配: {A.shape} 与 {B.shape}")


def hs_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Hilbert–Schmidt 内积 tr(A†B)"""
    A, B = np.asarray(A), np.asarray(B)
    _same_shape(A, B)
    return complex(np.vdot(A, B))


def report(rho: DensityMatrix, ops: FockOperators, t: float) -> ObservableReport:
    """计算 ⟨n̂⟩、⟨â⟩、纯度与各项物理态诊断"""
    if rho.dim != ops.dim:
        raise ShapeError(f"密度矩阵维数 {rho.dim} 与算符维数 {ops.dim} 不符")
    data = rho.data
    return ObservableReport(
        t=float(t),
        mean_n=float(np.dot(ops.levels, data.diagonal().real)),
        mean_a=complex(np.trace(ops.lowering @ data)),
        purity=float(np.sum(data * data.T).real),
        trace_err=rho.trace_error,
        herm_defect=rho.herm_defect,
        min_eig=rho.min_eigenvalue,
        tail_pop=rho.tail_population,
    )


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """(1/2) Σ |λᵢ(ρ₁ − ρ₂)|"""
    _same_shape(rho1.data, rho2.data)
    difference = rho1.data - rho2.data
    eigenvalues = np.linalg.eigvalsh(0.5 * (difference + difference.conj().T))
    return float(0.5 * np.sum(np.abs(eigenvalues)))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """(tr √(√ρ₁ ρ₂ √ρ₁))²"""
    _same_shape(rho1.data, rho2.data)
    root = _psd_sqrt(rho1.data)
    inner = root @ rho2.data @ root
    eigenvalues = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(eigenvalues, 0.0, None))) ** 2)
