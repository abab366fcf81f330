"""
Shared fixtures: Pauli matrices and seeded random instances.
"""
import numpy as np
import pytest

from processors.linalg import HermitianOperator
from utils.random_instances import random_instance

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@pytest.fixture
def pauli():
    return {
        "x": HermitianOperator(SIGMA_X),
        "y": HermitianOperator(SIGMA_Y),
        "z": HermitianOperator(SIGMA_Z),
    }


@pytest.fixture
def make_instance():
    """random_instance with rank defaulting to dim"""
    def make(dim, rank=None, seed=0, estimator=False):
        return random_instance(dim, dim if rank is None else rank, seed, estimator=estimator)
    return make
