import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from services.fock import DensityMatrix, build_ladder_ops
from services.lindblad_core import HarmonicForce, OscillatorParams, ZeroForce


def random_density(dim: int, support: int, seed: int) -> DensityMatrix:
    """前 support 个能级上的随机密度矩阵"""
    rng = np.random.default_rng(seed)
    block = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    block = block @ block.conj().T
    data = np.zeros((dim, dim), dtype=complex)
    data[:support, :support] = block / np.trace(block).real
    return DensityMatrix(dim=dim, data=0.5 * (data + data.conj().T))


@pytest.fixture
def harmonic_params():
    return OscillatorParams(omega=1.0, mu=0.3, nu=0.1, force=HarmonicForce(f0=0.2, Omega=0.9))


@pytest.fixture
def free_params():
    return OscillatorParams(omega=1.0, mu=0.3, nu=0.1, force=ZeroForce())


@pytest.fixture
def ops8():
    return build_ladder_ops(8)


@pytest.fixture(scope="session")
def ops40():
    return build_ladder_ops(40)
