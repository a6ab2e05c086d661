"""
主方程的解析解

Liouville 空间中的演化算符先由 su(1,1) 解缠分解

    e^{t(μK̂₋ + νK̂₊ − γ'K̂₀)} = e^{d₊K̂₊} e^{d₀K̂₀} e^{d₋K̂₋}

再与外力产生的位移合并, 变回算符形式后得到

    ρ(t) = (e^δ/λ) Σⱼ (d₊ʲ/j!) â†ʲ e^{(−iωt−log λ)n̂} [Σₖ (d₋ᵏ/k!) âᵏ ρ_f â†ᵏ] e^{(iωt−log λ)n̂} âʲ
    ρ_f = D(χ) ρ(0) D†(χ),   χ(t) = i∫₀ᵗ f(τ) e^{(γ+iω)τ} dτ

δ 的被积函数恰为 d|χ|²/dt, 所以 δ(t) = γt; 数值积分与闭式仍然分别计算, 作为独立校验。
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from services.errors import DomainError, QuadratureError
from services.fock import (
    DensityMatrix, FockOperators, coherent_state, displacement, warn_if_truncated,
)
from services.lindblad_core import HarmonicForce, OscillatorParams, SampledForce, ZeroForce
from services.superop import SuperOperatorSet, build_superops, interior_indices

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureControl:
    """自适应数值积分的容差"""
    epsabs: float = 1e-13
    epsrel: float = 1e-12
    limit: int = 200
    max_error: float = 1e-9


@dataclass(frozen=True)
class SCoefficients:
    t: float
    d_plus: float
    d_minus: float
    d_zero: float
    lam: float


@dataclass(frozen=True)
class RCoefficients:
    t: float
    g1: complex
    chi: complex
    g6: float
    delta: float


@dataclass(frozen=True)
class GCoefficients:
    """g₁…g₆, 各自由定义积分求得"""
    t: float
    g1: complex
    g2: complex
    g3: complex
    g4: complex
    g5: complex
    g6: complex


@dataclass(frozen=True)
class ThermalCoherentState:
    """位移热态 D(α) (1−u) u^n̂ D†(α)"""
    alpha: complex
    u: float

    def __post_init__(self):
        object.__setattr__(self, 'alpha', complex(self.alpha))
        if not 0.0 < self.u < 1.0:
            raise DomainError(f"热相干态参数 u 必须在 (0, 1) 内, 得到 {self.u}")

    @property
    def sigma(self) -> float:
        return math.log(self.u)

    @property
    def b(self) -> float:
        return 1.0 - self.u

    @property
    def beta(self) -> complex:
        return self.b * self.alpha

    @property
    def Z(self) -> float:
        return 1.0 / self.b


# ---------------------------------------------------------------- 解缠系数

def s_coefficients(params: OscillatorParams, t: float) -> SCoefficients:
    """解缠系数 d₊, d₋, d₀ 与 λ = e^{−d₀}"""
    if t < 0:
        raise DomainError(f"时间必须非负, 得到 {t}")
    mu, nu, gamma = params.mu, params.nu, params.gamma
    # 以 e^{−2γt} 表示, 长时间下不溢出
    x = math.exp(-2.0 * gamma * t)
    denominator = mu - nu * x
    d_plus = nu * (1.0 - x) / denominator
    d_minus = mu * (1.0 - x) / denominator
    lam = math.exp(gamma * t) * denominator / (2.0 * gamma)
    return SCoefficients(t=t, d_plus=d_plus, d_minus=d_minus, d_zero=-math.log(lam), lam=lam)


def verify_us_factorization(params: OscillatorParams, t: float, sops: SuperOperatorSet,
                            interior: bool = True, reference_padding: int = 24) -> float:
    """乘积形式与直接矩阵指数之差的最大模

    参考指数在维数 N + reference_padding 上计算再截取到 N 块;
    reference_padding=0 即直接比较截断后的矩阵指数。
    """
    if reference_padding < 0:
        raise DomainError(f"reference_padding 必须非负, 得到 {reference_padding}")
    N = sops.dim
    s = s_coefficients(params, t)
    product = (expm(s.d_plus * sops.Kplus)
               @ np.diag(np.exp(s.d_zero * np.diag(sops.K0).real))
               @ expm(s.d_minus * sops.Kminus))

    big = build_superops(N + reference_padding) if reference_padding else sops
    generator = params.mu * big.Kminus + params.nu * big.Kplus - params.gamma_prime * big.K0
    reference = expm(t * generator).real
    levels = np.arange(N)
    block = (levels[:, None] * big.dim + levels[None, :]).reshape(-1)
    reference = reference[np.ix_(block, block)]

    difference = product - reference
    if interior:
        idx = interior_indices(N)
        difference = difference[np.ix_(idx, idx)]
    residual = float(np.max(np.abs(difference)))
    logger.debug(f"解缠分解残差: t={t}, N={N}, padding={reference_padding}, {residual:.3e}")
    return residual


# ---------------------------------------------------------------- 外力积分

def _quad_piece(integrand: Callable[[float], complex], a: float, b: float,
                control: QuadratureControl) -> Tuple[complex, float]:
    """[a, b] 上实部与虚部分别做自适应积分"""
    options = dict(epsabs=control.epsabs, epsrel=control.epsrel, limit=control.limit, full_output=1)
    real_part = quad(lambda s: integrand(s).real, a, b, **options)
    imag_part = quad(lambda s: integrand(s).imag, a, b, **options)
    return complex(real_part[0], imag_part[0]), real_part[1] + imag_part[1]


def _accept(value: complex, error: float, t: float, control: QuadratureControl) -> None:
    # 被积函数随 e^{γt} 增长, 误差估计按结果的量级衡量
    if error > control.max_error * max(1.0, abs(value)):
        logger.error(f"数值积分未收敛: t={t}, 误差估计 {error:.3e}, 积分值量级 {abs(value):.3e}")
        raise QuadratureError(f"数值积分未达到相对精度 {control.max_error:.1e}", error)


def _segments(force, t: float) -> List[Tuple[float, float]]:
    """采样驱动在各采样点之间分段, 其余驱动只有一段"""
    nodes = [0.0, t]
    if isinstance(force, SampledForce):
        nodes = [0.0] + [s for s in force.times if 0.0 < s < t] + [t]
    return list(zip(nodes[:-1], nodes[1:]))


def _complex_quad(integrand: Callable[[float], complex], t: float, control: QuadratureControl,
                  force=None) -> Tuple[complex, float]:
    """复值被积函数在 [0, t] 上逐段积分"""
    value, error = 0j, 0.0
    for a, b in _segments(force, t):
        piece, piece_error = _quad_piece(integrand, a, b, control)
        value += piece
        error += piece_error
    _accept(value, error, t, control)
    return value, error


def _segment_antiderivative(fa: float, slope: float, a: float, kappa: complex, s: float) -> complex:
    """线性段 f(τ) = fa + slope (τ − a) 与 e^{κτ} 乘积的原函数"""
    f_s = fa + slope * (s - a)
    return np.exp(kappa * s) * (f_s / kappa - slope / kappa ** 2)


def _sampled_exp_integral(force: SampledForce, kappa: complex, t: float) -> complex:
    """线性插值驱动与 e^{κτ} 乘积在 [0, t] 上的精确积分"""
    total = 0j
    for a, b in _segments(force, t):
        fa, fb = force.value(a), force.value(b)
        slope = (fb - fa) / (b - a)
        total += _segment_antiderivative(fa, slope, a, kappa, b) - _segment_antiderivative(fa, slope, a, kappa, a)
    return complex(total)


def _kappa(params: OscillatorParams) -> complex:
    return complex(params.gamma, params.omega)


def chi_quadrature(params: OscillatorParams, t: float,
                   control: QuadratureControl = QuadratureControl()) -> complex:
    """χ(t) = i∫₀ᵗ f(τ) e^{(γ+iω)τ} dτ"""
    if t < 0:
        raise DomainError(f"时间必须非负, 得到 {t}")
    force = params.force
    if t == 0 or isinstance(force, ZeroForce):
        return 0j
    kappa = _kappa(params)
    if isinstance(force, SampledForce):
        return 1j * _sampled_exp_integral(force, kappa, t)
    value, _ = _complex_quad(lambda s: force.value(s) * np.exp(kappa * s), t, control)
    return 1j * value


def chi_harmonic(f0: float, Omega: float, params: OscillatorParams, t: float) -> complex:
    """f(t) = f0 cos(Ωt) 时 χ 的闭式"""
    omega, gamma = params.omega, params.gamma
    up = (np.exp(complex(gamma, omega + Omega) * t) - 1.0) / complex(omega + Omega, -gamma)
    down = (np.exp(complex(gamma, omega - Omega) * t) - 1.0) / complex(omega - Omega, -gamma)
    return complex(0.5 * f0 * (up + down))


def _chi_increment(params: OscillatorParams, a: float, s: float,
                   control: QuadratureControl) -> complex:
    """i∫ₐˢ f(τ) e^{κτ} dτ, a 与 s 位于同一分段内"""
    if s == a:
        return 0j
    force, kappa = params.force, _kappa(params)
    if isinstance(force, SampledForce):
        fa = force.value(a)
        slope = (force.value(s) - fa) / (s - a)
        return 1j * (_segment_antiderivative(fa, slope, a, kappa, s)
                     - _segment_antiderivative(fa, slope, a, kappa, a))
    return 1j * _quad_piece(lambda r: force.value(r) * np.exp(kappa * r), a, s, control)[0]


def delta_quadrature(params: OscillatorParams, t: float,
                     control: QuadratureControl = QuadratureControl()) -> float:
    """δ(t) = γt + i∫₀ᵗ f(χ* e^{κτ} − χ e^{κ̄τ}) dτ − |χ(t)|², 内层 χ 同样数值积分

    外层逐段积分, 内层 χ 从段起点的累计值续算。
    """
    if t < 0:
        raise DomainError(f"时间必须非负, 得到 {t}")
    gamma_t = params.gamma * t
    force = params.force
    if t == 0 or isinstance(force, ZeroForce):
        return gamma_t
    kappa = _kappa(params)

    value, error, chi_a = 0j, 0.0, 0j
    for a, b in _segments(force, t):
        def integrand(s: float, a=a, chi_a=chi_a) -> complex:
            chi_s = chi_a + _chi_increment(params, a, s, control)
            return 1j * force.value(s) * (chi_s.conjugate() * np.exp(kappa * s)
                                          - chi_s * np.exp(kappa.conjugate() * s))

        piece, piece_error = _quad_piece(integrand, a, b, control)
        value += piece
        error += piece_error
        chi_a += _chi_increment(params, a, b, control)
    _accept(value, error, t, control)
    if abs(value.imag) > control.max_error * max(1.0, abs(value)):
        raise QuadratureError("δ 被积函数的虚部残差过大", abs(value.imag))
    chi_t = chi_quadrature(params, t, control)
    return gamma_t + value.real - abs(chi_t) ** 2


def delta_harmonic(f0: float, Omega: float, params: OscillatorParams, t: float) -> float:
    """f(t) = f0 cos(Ωt) 时 δ = γt + Re J − |χ|² 的闭式"""
    gamma = params.gamma
    p = complex(gamma, params.omega + Omega)
    q = complex(gamma, params.omega - Omega)

    def E(s: complex) -> complex:
        return (np.exp(s * t) - 1.0) / s

    two_gamma = complex(2.0 * gamma, 0.0)
    J = 2.0 * (0.5 * f0) ** 2 * (
        (E(two_gamma) - E(p) + E(complex(2.0 * gamma, -2.0 * Omega)) - E(q)) / p.conjugate()
        + (E(complex(2.0 * gamma, 2.0 * Omega)) - E(p) + E(two_gamma) - E(q)) / q.conjugate()
    )
    chi_t = chi_harmonic(f0, Omega, params, t)
    return float(gamma * t + J.real - abs(chi_t) ** 2)


def r_coefficients(params: OscillatorParams, t: float, method: str = "auto",
                   control: QuadratureControl = QuadratureControl()) -> RCoefficients:
    """外力部分的系数; auto 对谐波驱动使用闭式, 其余走数值积分"""
    force = params.force
    if method not in ("auto", "quadrature"):
        raise DomainError(f"未知的系数求法: {method}")
    if isinstance(force, ZeroForce):
        chi, delta = 0j, params.gamma * t
    elif method == "auto" and isinstance(force, HarmonicForce):
        chi = chi_harmonic(force.f0, force.Omega, params, t)
        delta = delta_harmonic(force.f0, force.Omega, params, t)
    else:
        chi = chi_quadrature(params, t, control)
        delta = delta_quadrature(params, t, control)
    return RCoefficients(t=t, g1=complex(0.0, -params.omega * t), chi=chi,
                         g6=delta + abs(chi) ** 2, delta=delta)


def g_coefficients(params: OscillatorParams, t: float,
                   control: QuadratureControl = QuadratureControl()) -> GCoefficients:
    """g₂…g₆ 逐个按定义积分, c(τ) = −f(τ)e^{γτ}"""
    omega, gamma = params.omega, params.gamma
    g1 = complex(0.0, -omega * t)
    if t == 0:
        return GCoefficients(t=t, g1=g1, g2=0j, g3=0j, g4=0j, g5=0j, g6=0j)

    def c(s: float) -> float:
        return -params.f(s) * math.exp(gamma * s)

    def up(s: float) -> complex:
        return c(s) * np.exp(1j * omega * s)

    def integral(kernel: Callable[[float], complex]) -> complex:
        return _complex_quad(kernel, t, control, params.force)[0]

    g2 = -1j * integral(lambda s: c(s) * np.exp(-1j * omega * s))
    g3 = -1j * integral(up)
    g4 = 1j * integral(up)
    g5 = 1j * integral(lambda s: c(s) * np.exp(-1j * omega * s))

    # g₃(s) 从段起点的累计值续算
    inner_total, error, g3_a = 0j, 0.0, 0j
    for a, b in _segments(params.force, t):
        def g6_kernel(s: float, a=a, g3_a=g3_a) -> complex:
            inner = g3_a - 1j * _quad_piece(up, a, s, control)[0] if s > a else g3_a
            return c(s) * (inner * np.exp(-1j * omega * s) - inner.conjugate() * np.exp(1j * omega * s))

        piece, piece_error = _quad_piece(g6_kernel, a, b, control)
        inner_total += piece
        error += piece_error
        g3_a -= 1j * _quad_piece(up, a, b, control)[0]
    _accept(inner_total, error, t, control)

    g6 = gamma * t + 1j * inner_total
    return GCoefficients(t=t, g1=g1, g2=g2, g3=g3, g4=g4, g5=g5, g6=g6)


# ---------------------------------------------------------------- 解的组装

def _assemble(rho_f: np.ndarray, s: SCoefficients, omega: float, prefactor: float,
              ops: FockOperators) -> np.ndarray:
    a, a_dag = ops.lowering, ops.raising
    N = ops.dim

    inner = rho_f.astype(complex)
    term = inner
    for k in range(1, N):
        term = (s.d_minus / k) * (a @ term @ a_dag)
        if not term.any():
            break
        inner = inner + term

    phase = np.exp((-1j * omega * s.t - math.log(s.lam)) * ops.levels)
    middle = phase[:, None] * inner * phase.conj()[None, :]

    outer = middle
    term = middle
    for j in range(1, N):
        term = (s.d_plus / j) * (a_dag @ term @ a)
        if not term.any():
            break
        outer = outer + term

    result = prefactor * outer
    return 0.5 * (result + result.conj().T)


def force_free_solution(rho0: DensityMatrix, params: OscillatorParams, t: float,
                        ops: FockOperators, tail_tol: float = 1e-10) -> DensityMatrix:
    """f ≡ 0 时的解, 前因子 e^{γt}/λ"""
    if t == 0:
        return rho0
    s = s_coefficients(params, t)
    data = _assemble(rho0.data, s, params.omega, np.exp(params.gamma * t) / s.lam, ops)
    rho = DensityMatrix(dim=ops.dim, data=data)
    warn_if_truncated(rho, tail_tol)
    return rho


def assemble_general_solution(rho0: DensityMatrix, params: OscillatorParams, t: float,
                              ops: FockOperators, method: str = "auto",
                              tail_tol: float = 1e-10,
                              control: QuadratureControl = QuadratureControl()) -> DensityMatrix:
    """任意初态、任意外力下的解析解"""
    if rho0.dim != ops.dim:
        raise DomainError(f"初态维数 {rho0.dim} 与算符维数 {ops.dim} 不符")
    if t == 0:
        return rho0
    s = s_coefficients(params, t)
    r = r_coefficients(params, t, method, control)
    if r.chi == 0:
        rho_f = rho0.data
    else:
        D = displacement(r.chi, ops)
        rho_f = D @ rho0.data @ D.conj().T
    data = _assemble(rho_f, s, params.omega, np.exp(r.delta) / s.lam, ops)
    rho = DensityMatrix(dim=ops.dim, data=data)
    warn_if_truncated(rho, tail_tol)
    return rho


def _displaced_exponent(alpha: complex, ops: FockOperators) -> np.ndarray:
    """|α|² + n̂ − αâ† − α*â = D(α) n̂ D†(α)"""
    return (abs(alpha) ** 2 * ops.identity + ops.number
            - alpha * ops.raising - alpha.conjugate() * ops.lowering)


def coherent_initial_solution(params: OscillatorParams, t: float, ops: FockOperators,
                              control: QuadratureControl = QuadratureControl()) -> DensityMatrix:
    """真空初态的简化解 (1−d₊) e^{log d₊ (|α|² + n̂ − αâ† − α*â)}, α = χ e^{−(γ+iω)t}"""
    if params.nu <= 0 or t <= 0:
        raise DomainError("简化解要求 d₊ > 0, 即 nu > 0 且 t > 0")
    s = s_coefficients(params, t)
    chi = r_coefficients(params, t, "auto", control).chi
    alpha = complex(chi * np.exp(-_kappa(params) * t))
    data = (1.0 - s.d_plus) * expm(math.log(s.d_plus) * _displaced_exponent(alpha, ops))
    rho = DensityMatrix(dim=ops.dim, data=0.5 * (data + data.conj().T))
    warn_if_truncated(rho, 1e-10)
    return rho


# ---------------------------------------------------------------- 热相干态与极限环

def riccati_u(params: OscillatorParams, u0: float, t: float) -> float:
    """u̇ = ν − (μ+ν)u + μu² 的闭式解, 不动点 ν/μ 与 1"""
    if not 0.0 < u0 < 1.0:
        raise DomainError(f"u0 必须在 (0, 1) 内, 得到 {u0}")
    r = params.nu / params.mu
    w = (u0 - r) / (u0 - 1.0) * math.exp(-2.0 * params.gamma * t)
    return (r - w) / (1.0 - w)


def thermal_coherent_density(state: ThermalCoherentState, ops: FockOperators) -> DensityMatrix:
    D = displacement(state.alpha, ops)
    thermal = np.diag(state.b * state.u ** ops.levels)
    data = D @ thermal @ D.conj().T
    return DensityMatrix(dim=ops.dim, data=0.5 * (data + data.conj().T))


def evolve_thermal_coherent(state0: ThermalCoherentState, params: OscillatorParams, t: float,
                            control: QuadratureControl = QuadratureControl()) -> ThermalCoherentState:
    """热相干态在演化下保持形式, 只需推进 u 与 α"""
    u = riccati_u(params, state0.u, t)
    chi = chi_quadrature(params, t, control)
    alpha = np.exp(-_kappa(params) * t) * (state0.alpha + chi)
    return ThermalCoherentState(alpha=complex(alpha), u=u)


def alpha_limit_cycle(f0: float, Omega: float, params: OscillatorParams, t: float) -> complex:
    omega, gamma = params.omega, params.gamma
    return complex(0.5 * f0 * (np.exp(1j * Omega * t) / complex(omega + Omega, -gamma)
                               + np.exp(-1j * Omega * t) / complex(omega - Omega, -gamma)))


def limit_cycle_density(f0: float, Omega: float, params: OscillatorParams, t: float,
                        ops: FockOperators, tail_tol: float = 1e-10) -> DensityMatrix:
    """极限环分布 (2γ/μ) e^{log(ν/μ)(|α|² + n̂ − αâ† − α*â)}; ν = 0 时为纯相干态"""
    alpha = alpha_limit_cycle(f0, Omega, params, t)
    if params.nu == 0:
        rho = coherent_state(alpha, ops)
    else:
        exponent = math.log(params.nu / params.mu) * _displaced_exponent(alpha, ops)
        data = (2.0 * params.gamma / params.mu) * expm(exponent)
        rho = DensityMatrix(dim=ops.dim, data=0.5 * (data + data.conj().T))
    warn_if_truncated(rho, tail_tol)
    return rho
