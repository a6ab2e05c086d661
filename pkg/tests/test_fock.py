import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from services.errors import DomainError, InvalidDimensionError, ShapeError, TruncationWarning
from services.fock import (
    DensityMatrix, Tolerances, build_ladder_ops, coherent_state, displacement, fock_state, kron,
    thermal_state, truncation_leakage, unvec, vec,
)


def test_ladder_operators_n4():
    ops = build_ladder_ops(4)
    expected = np.zeros((4, 4))
    expected[0, 1], expected[1, 2], expected[2, 3] = 1.0, np.sqrt(2), np.sqrt(3)
    assert_allclose(ops.lowering, expected, atol=0)
    assert_allclose(ops.raising, expected.T, atol=0)
    assert_allclose(np.diag(ops.number).real, [0, 1, 2, 3])


def test_number_is_raising_times_lowering():
    ops = build_ladder_ops(7)
    assert_allclose(ops.raising @ ops.lowering, ops.number, atol=1e-15)


def test_commutator_is_identity_except_last_level():
    ops = build_ladder_ops(6)
    comm = ops.lowering @ ops.raising - ops.raising @ ops.lowering
    expected = np.eye(6)
    expected[-1, -1] = -5.0
    assert_allclose(comm, expected, atol=1e-14)


def test_operators_are_read_only():
    ops = build_ladder_ops(3)
    with pytest.raises(ValueError):
        ops.lowering[0, 1] = 2.0


@pytest.mark.parametrize("N", [0, 1, -3, 2.5])
def test_invalid_dimension(N):
    with pytest.raises(InvalidDimensionError):
        build_ladder_ops(N)


def test_kron_identity_with_row_major_vec():
    rng = np.random.default_rng(3)
    A, X, B = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    assert_allclose(kron(A, B.T) @ vec(X), vec(A @ X @ B), atol=1e-12)


def test_vec_is_row_major():
    X = np.arange(4).reshape(2, 2)
    assert_allclose(vec(X), [0, 1, 2, 3])
    assert_allclose(unvec(np.arange(9.0)), np.arange(9.0).reshape(3, 3))


def random_matrices(seed, count, n=3):
    rng = np.random.default_rng(seed)
    return [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(count)]


def test_kron_mixed_product():
    A, B, C, D = random_matrices(7, 4)
    assert_allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-12)


def test_kron_with_identity_is_block_diagonal():
    B = random_matrices(8, 1)[0]
    block = kron(np.eye(2), B)
    assert_allclose(block[:3, :3], B, atol=0)
    assert_allclose(block[3:, 3:], B, atol=0)
    assert not block[:3, 3:].any() and not block[3:, :3].any()


def test_exponential_of_kron_sum():
    A, B = (0.5 * M for M in random_matrices(9, 2))
    total = kron(A, np.eye(3)) + kron(np.eye(3), B)
    assert_allclose(expm(total), kron(expm(A), expm(B)), atol=1e-11)


def test_sylvester_form_vectorizes():
    A, X, B = random_matrices(10, 3)
    generator = kron(A, np.eye(3)) + kron(np.eye(3), B.T)
    assert_allclose(generator @ vec(X), vec(A @ X + X @ B), atol=1e-12)


@pytest.mark.parametrize("n", [1, 4, 9])
def test_vec_unvec_restores_input_exactly(n):
    X = random_matrices(n, 1, n=n)[0]
    x = vec(X)
    assert np.array_equal(unvec(x), X)
    assert np.array_equal(vec(unvec(x)), x)


def test_shape_errors():
    with pytest.raises(ShapeError):
        vec(np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        unvec(np.zeros(5))
    with pytest.raises(ShapeError):
        kron(np.zeros((2, 3)), np.eye(2))


def test_displacement_zero_is_identity(ops8):
    assert_allclose(displacement(0, ops8), np.eye(8), atol=0)


def test_displacement_is_unitary():
    ops = build_ladder_ops(30)
    D = displacement(0.7 - 0.4j, ops)
    assert_allclose(D @ D.conj().T, np.eye(30), atol=1e-12)


def test_displacement_composition_on_low_block():
    ops = build_ladder_ops(40)
    alpha, beta = 0.3 + 0.1j, -0.2 + 0.25j
    phase = np.exp(0.5 * (alpha * beta.conjugate() - alpha.conjugate() * beta))
    lhs = displacement(alpha, ops) @ displacement(beta, ops)
    rhs = phase * displacement(alpha + beta, ops)
    assert_allclose(lhs[:10, :10], rhs[:10, :10], atol=1e-10)


def test_coherent_state_poisson_populations():
    ops = build_ladder_ops(30)
    alpha = 0.8
    rho = coherent_state(alpha, ops)
    n = np.arange(10)
    factorial = np.array([np.prod(np.arange(1, k + 1, dtype=float)) for k in n])
    expected = np.exp(-alpha ** 2) * alpha ** (2 * n) / factorial
    assert_allclose(np.diag(rho.data)[:10].real, expected, atol=1e-12)


def test_coherent_column_matches_power_series(ops40):
    alpha = 0.7 + 0.3j
    n = np.arange(40)
    log_factorial = np.array([math.lgamma(k + 1) for k in n])
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / np.exp(0.5 * log_factorial)
    assert_allclose(displacement(alpha, ops40)[:, 0], expected, atol=1e-12)


def test_truncation_leakage():
    ops = build_ladder_ops(5)
    assert truncation_leakage(fock_state(0, ops).data) == 0.0
    assert truncation_leakage(fock_state(4, ops).data) == 1.0


def test_density_matrix_diagnostics():
    ops = build_ladder_ops(10)
    rho = thermal_state(1 / 3, ops)
    assert rho.herm_defect == 0.0
    assert rho.trace_error < 1e-4
    assert rho.min_eigenvalue > 0
    assert rho.tail_population == pytest.approx((2 / 3) * (1 / 3) ** 9)


def test_density_matrix_is_immutable():
    rho = fock_state(1, build_ladder_ops(3))
    with pytest.raises(ValueError):
        rho.data[0, 0] = 1.0


def test_check_rejects_non_hermitian():
    data = np.diag([1.0, 0.0]).astype(complex)
    data[0, 1] = 1e-3
    with pytest.raises(DomainError):
        DensityMatrix.from_array(data).check()


def test_check_rejects_wrong_trace():
    with pytest.raises(DomainError):
        DensityMatrix.from_array(np.diag([0.5, 0.0])).check()


def test_check_rejects_negative_eigenvalue():
    with pytest.raises(DomainError):
        DensityMatrix.from_array(np.diag([1.1, -0.1])).check()


def test_check_warns_on_tail_population():
    rho = DensityMatrix.from_array(np.diag([0.5, 0.5]))
    with pytest.warns(TruncationWarning):
        rho.check(Tolerances())


def test_check_passes_quietly_for_vacuum():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fock_state(0, build_ladder_ops(4)).check()


def test_state_constructors_validate():
    ops = build_ladder_ops(4)
    with pytest.raises(DomainError):
        fock_state(4, ops)
    with pytest.raises(DomainError):
        thermal_state(1.0, ops)
