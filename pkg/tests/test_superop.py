import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_density
from services.errors import DomainError
from services.fock import build_ladder_ops, coherent_state, fock_state, vec
from services.lindblad_core import HarmonicForce, OscillatorParams, SampledForce, integrate, lindblad_rhs
from services.superop import (
    build_super_hamiltonian, build_superops, commutator, evolve_constant, evolve_vectorized,
    evolved_operator, interior_block, interior_indices,
)


@pytest.fixture(scope="module")
def sops6():
    return build_superops(6)


def test_kplus_at_n2():
    sops = build_superops(2)
    nonzero = np.argwhere(sops.Kplus != 0)
    assert nonzero.tolist() == [[3, 0]]
    assert sops.Kplus[3, 0] == 1.0


def test_generator_adjoint_structure(sops6):
    assert_allclose(sops6.K0, sops6.K0.conj().T, atol=0)
    assert_allclose(sops6.Kminus, sops6.Kplus.conj().T, atol=0)


def test_k0_from_a_and_b(sops6):
    s = sops6
    assert_allclose(s.K0, s.Adag @ s.Ahat + s.Bdag @ s.Bhat + s.Ihat, atol=1e-14)


def test_interior_indices():
    assert interior_indices(3).tolist() == [0, 1, 3, 4]


def test_su11_relations_on_interior():
    for N in (6, 9, 12):
        s = build_superops(N)
        assert np.max(np.abs(interior_block(commutator(s.K0, s.Kplus) - 2 * s.Kplus, N))) <= 1e-12
        assert np.max(np.abs(interior_block(commutator(s.K0, s.Kminus) + 2 * s.Kminus, N))) <= 1e-12
        assert np.max(np.abs(interior_block(commutator(s.Kplus, s.Kminus) + s.K0, N))) <= 1e-12


def test_ab_commutator_table(sops6):
    s, N = sops6, 6
    table = [
        (s.K0, s.Ahat, -s.Ahat), (s.K0, s.Bhat, -s.Bhat),
        (s.K0, s.Adag, s.Adag), (s.K0, s.Bdag, s.Bdag),
        (s.Kplus, s.Ahat, -s.Bdag), (s.Kplus, s.Bhat, -s.Adag),
        (s.Kplus, s.Adag, 0 * s.Ihat), (s.Kplus, s.Bdag, 0 * s.Ihat),
        (s.Kminus, s.Ahat, 0 * s.Ihat), (s.Kminus, s.Bhat, 0 * s.Ihat),
        (s.Kminus, s.Adag, s.Bhat), (s.Kminus, s.Bdag, s.Ahat),
    ]
    for generator, operator, expected in table:
        assert np.max(np.abs(interior_block(commutator(generator, operator) - expected, N))) <= 1e-12


def test_number_difference_commutators(sops6):
    s, N = sops6, 6
    for operator, sign in ((s.Ahat, -1), (s.Adag, 1), (s.Bhat, 1), (s.Bdag, -1)):
        assert np.max(np.abs(interior_block(commutator(s.Nhat, operator) - sign * operator, N))) <= 1e-12
    assert np.max(np.abs(commutator(s.Nhat, s.K0))) == 0.0
    assert np.max(np.abs(interior_block(commutator(s.Nhat, s.Kplus), N))) <= 1e-12


def test_adjoint_actions_on_interior(sops6):
    s, N, x = sops6, 6, 0.1
    cases = [
        (s.K0, s.Ahat, np.exp(-x) * s.Ahat),
        (s.K0, s.Adag, np.exp(x) * s.Adag),
        (s.Kplus, s.Ahat, s.Ahat - x * s.Bdag),
        (s.Kplus, s.Bhat, s.Bhat - x * s.Adag),
        (s.Kminus, s.Adag, s.Adag + x * s.Bhat),
        (s.Kminus, s.Bdag, s.Bdag + x * s.Ahat),
    ]
    for generator, operator, expected in cases:
        actual = evolved_operator(generator, operator, x)
        assert np.max(np.abs(interior_block(actual - expected, N))) <= 1e-12


def test_super_hamiltonian_matches_rhs():
    params = OscillatorParams(omega=1.0, mu=0.3, nu=0.1, force=HarmonicForce(f0=0.2, Omega=0.9))
    sops = build_superops(8)
    ops = build_ladder_ops(8)
    rho = random_density(8, 8, seed=11)
    for t in (0.0, 0.8, 2.5):
        H = build_super_hamiltonian(params, t, sops)
        direct = vec(lindblad_rhs(rho, params, t, ops))
        assert np.max(np.abs(direct - (-1j) * H.total @ vec(rho.data))) <= 1e-12
        assert_allclose(H.generator, -1j * H.total, atol=1e-15)


def test_super_hamiltonian_hermitian_parts(harmonic_params, sops6):
    H = build_super_hamiltonian(harmonic_params, 0.3, sops6)
    assert np.max(np.abs(H.H0 - H.H0.conj().T)) == 0.0
    skew = H.G - H.G.conj().T
    expected = (harmonic_params.mu - harmonic_params.nu) * (sops6.Kminus - sops6.Kplus)
    assert np.max(np.abs(skew - expected)) <= 1e-14


def test_weak_damping_rotates_coherences():
    params = OscillatorParams(omega=1.0, mu=1e-14, nu=0.0)
    sops = build_superops(4)
    H = build_super_hamiltonian(params, 0.0, sops)
    assert_allclose(np.diag(H.total).real, np.diag(sops.Nhat).real, atol=0)


def test_dual_oracle_agreement(harmonic_params):
    ops = build_ladder_ops(16)
    grid = np.linspace(0, 5, 11)
    rho0 = coherent_state(0.5, ops)
    direct = integrate(rho0, harmonic_params, grid)
    vectorized = evolve_vectorized(rho0, harmonic_params, grid)
    for a, b in zip(direct.states, vectorized.states):
        assert np.max(np.abs(a.data - b.data)) <= 1e-8
        assert abs(np.trace(b.data) - 1) <= 1e-8


def test_constant_generator_matches_exponential(free_params):
    ops = build_ladder_ops(10)
    rho0 = coherent_state(0.4 + 0.2j, ops)
    trajectory = evolve_vectorized(rho0, free_params, [0.0, 1.5, 3.0])
    exact = evolve_constant(rho0, free_params, 3.0)
    assert np.max(np.abs(trajectory.final.data - exact.data)) <= 1e-8


def test_constant_force_exponential_matches_direct():
    params = OscillatorParams(omega=1.0, mu=0.3, nu=0.1, force=HarmonicForce(f0=0.2, Omega=0.0))
    ops = build_ladder_ops(16)
    rho0 = fock_state(0, ops)
    direct = integrate(rho0, params, [0.0, 2.0])
    assert np.max(np.abs(direct.final.data - evolve_constant(rho0, params, 2.0).data)) <= 1e-8


def test_constant_exponential_rejects_time_dependent_force(harmonic_params):
    with pytest.raises(DomainError):
        evolve_constant(fock_state(0, build_ladder_ops(4)), harmonic_params, 1.0)
    sampled = OscillatorParams(omega=1.0, mu=0.3, nu=0.1,
                               force=SampledForce(times=(0.0, 1.0), values=(0.0, 1.0)))
    with pytest.raises(DomainError):
        evolve_constant(fock_state(0, build_ladder_ops(4)), sampled, 1.0)
