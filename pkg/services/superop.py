"""
Liouville 空间 (Kronecker 向量化) 表示与第二个积分器

行优先向量化下:
    Â = â⊗I,  B̂ = I⊗â   (B̂|ρ⟩ = |ρâ†⟩)
    K̂₀ = n̂⊗I + I⊗n̂ + I⊗I,  K̂₊ = â†⊗â†,  K̂₋ = â⊗â
    N̂ = n̂⊗I − I⊗n̂
    i d|ρ⟩/dt = (Ĥ₀ + iĜ)|ρ⟩
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from services.errors import DomainError, ShapeError
from services.fock import DensityMatrix, Tolerances, build_ladder_ops, kron, vec
from services.lindblad_core import (
    HarmonicForce, OscillatorParams, StepControl, Trajectory, ZeroForce, march,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SuperOperatorSet:
    dim: int
    K0: np.ndarray
    Kplus: np.ndarray
    Kminus: np.ndarray
    Nhat: np.ndarray
    Ihat: np.ndarray
    Ahat: np.ndarray
    Adag: np.ndarray
    Bhat: np.ndarray
    Bdag: np.ndarray


@dataclass(frozen=True, eq=False)
class SuperHamiltonian:
    """Ĥ_cal = Ĥ₀ + iĜ"""
    H0: np.ndarray
    G: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.H0 + 1j * self.G

    @property
    def generator(self) -> np.ndarray:
        """d|ρ⟩/dt = generator |ρ⟩"""
        return -1j * self.H0 + self.G


def build_superops(N: int) -> SuperOperatorSet:
    """由阶梯算符构造全部超算符生成元"""
    ops = build_ladder_ops(N)
    a, a_dag, n, eye = ops.lowering, ops.raising, ops.number, ops.identity
    return SuperOperatorSet(
        dim=ops.dim,
        K0=kron(n, eye) + kron(eye, n) + kron(eye, eye),
        Kplus=kron(a_dag, a_dag),
        Kminus=kron(a, a),
        Nhat=kron(n, eye) - kron(eye, n),
        Ihat=kron(eye, eye),
        Ahat=kron(a, eye),
        Adag=kron(a_dag, eye),
        Bhat=kron(eye, a),
        Bdag=kron(eye, a_dag),
    )


def _force_superop(sops: SuperOperatorSet) -> np.ndarray:
    return sops.Adag + sops.Ahat - sops.Bdag - sops.Bhat


def build_super_hamiltonian(params: OscillatorParams, t: float,
                            sops: SuperOperatorSet) -> SuperHamiltonian:
    """Ĥ₀ = ωN̂ − f(Â†+Â−B̂†−B̂), Ĝ = μK̂₋ + νK̂₊ − γ'K̂₀ + γÎ"""
    H0 = params.omega * sops.Nhat - params.f(t) * _force_superop(sops)
    G = (params.mu * sops.Kminus + params.nu * sops.Kplus
         - params.gamma_prime * sops.K0 + params.gamma * sops.Ihat)
    return SuperHamiltonian(H0=H0, G=G)


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


def interior_indices(N: int) -> np.ndarray:
    """两个张量因子都不超过 N−2 的 Liouville 指标 j·N + k"""
    levels = np.arange(N - 1)
    return (levels[:, None] * N + levels[None, :]).reshape(-1)


def interior_block(X: np.ndarray, N: int) -> np.ndarray:
    if X.shape != (N * N, N * N):
        raise ShapeError(f"超算符形状 {X.shape} 与维数 {N} 不符")
    idx = interior_indices(N)
    return X[np.ix_(idx, idx)]


def evolved_operator(generator: np.ndarray, operator: np.ndarray, x: complex) -> np.ndarray:
    """e^{xΓ} Ô e^{−xΓ}"""
    return expm(x * generator) @ operator @ expm(-x * generator)


def evolve_vectorized(rho0: DensityMatrix, params: OscillatorParams, t_grid: Sequence[float],
                      control: StepControl = StepControl(),
                      sops: Optional[SuperOperatorSet] = None) -> Trajectory:
    """积分 N² 维线性方程 d|ρ⟩/dt = −iĤ_cal|ρ⟩"""
    sops = sops or build_superops(rho0.dim)
    if sops.dim != rho0.dim:
        raise ShapeError(f"初态维数 {rho0.dim} 与超算符维数 {sops.dim} 不符")
    rho0.check(Tolerances(tail_tol=control.tail_tol))

    static = build_super_hamiltonian(params, 0.0, sops)
    # 含时部分只有外力项
    static_generator = -1j * params.omega * sops.Nhat + static.G
    force_generator = 1j * _force_superop(sops)

    def fun(t: float, y: np.ndarray) -> np.ndarray:
        out = static_generator @ y
        f_t = params.f(t)
        if f_t != 0.0:
            out += f_t * (force_generator @ y)
        return out

    logger.info(f"开始向量化积分: N={sops.dim}, Liouville 维数 {sops.dim ** 2}")
    return march(fun, vec(rho0.data), t_grid, control, sops.dim)


def evolve_constant(rho0: DensityMatrix, params: OscillatorParams, t: float,
                    sops: Optional[SuperOperatorSet] = None) -> DensityMatrix:
    """不含时驱动下的矩阵指数解 exp(−itĤ_cal)|ρ₀⟩"""
    force = params.force
    if not (isinstance(force, ZeroForce) or (isinstance(force, HarmonicForce) and force.Omega == 0)):
        raise DomainError("矩阵指数解只适用于零力或常力 (Omega = 0)")
    sops = sops or build_superops(rho0.dim)
    H_cal = build_super_hamiltonian(params, 0.0, sops).total
    y = expm(-1j * t * H_cal) @ vec(rho0.data)
    return DensityMatrix(dim=sops.dim, data=y.reshape(sops.dim, sops.dim))
