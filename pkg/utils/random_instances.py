"""
Random Instances - Seeded Ginibre states and GUE-type Hamiltonians

The generator is pinned so that a seed means the same instance everywhere:

* SplitMix64: state += 0x9E3779B97F4A7C15, then
  z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9, z = (z ^ z >> 27) * 0x94D049BB133111EB,
  output z ^ z >> 31 (all mod 2^64).
* Uniform: u = (x >> 11) * 2^-53.
* Normals (Box-Muller): from two uniforms u_a, u_b take r = sqrt(-2 ln(1 - u_a)),
  z0 = r cos(2 pi u_b), z1 = r sin(2 pi u_b); both are used, z0 first.
* Complex Gaussian: (x + i y) / sqrt(2) from two consecutive normals.
* Draw order: G (d x r, row-major), then A (d x d), then the estimator B.
  rho = G G^dagger / tr(G G^dagger), H = (A + A^dagger) / 2, T = (B + B^dagger) / 2.
* Child seed of trial i: the (i + 1)-th output of SplitMix64 started at the master seed.
"""
import math

import numpy as np

from processors.exceptions import ValidationError
from processors.linalg import DensityMatrix, HermitianOperator
from utils.file_handler import InstanceFile

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MAX_RANDOM_DIM = 16


class SplitMix64:
    """64-bit SplitMix generator with a Box-Muller normal stream"""

    def __init__(self, seed: int):
        self.state = seed & MASK64
        self._spare: float | None = None

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def complex_gaussian(self, rows: int, cols: int) -> np.ndarray:
        """Row-major matrix of standard complex Gaussians"""
        values = [complex(self.normal(), self.normal()) / math.sqrt(2.0) for _ in range(rows * cols)]
        return np.array(values, dtype=complex).reshape(rows, cols)


def child_seeds(master: int, count: int) -> list[int]:
    """Independent per-trial seeds; trial i gets the (i + 1)-th SplitMix64 output"""
    rng = SplitMix64(master)
    return [rng.next_u64() for _ in range(count)]


def rand_herm(rng: SplitMix64, dim: int) -> HermitianOperator:
    a = rng.complex_gaussian(dim, dim)
    return HermitianOperator(0.5 * (a + a.conj().T))


def rand_rho(rng: SplitMix64, dim: int, rank: int) -> DensityMatrix:
    """G G^dagger / tr(G G^dagger) for a dim x rank Ginibre matrix G"""
    g = rng.complex_gaussian(dim, rank)
    w = g @ g.conj().T
    w = 0.5 * (w + w.conj().T)
    return DensityMatrix(w / np.trace(w).real)


def rand_unitary(rng: SplitMix64, dim: int) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix"""
    q, r = np.linalg.qr(rng.complex_gaussian(dim, dim))
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_instance(dim: int, rank: int, seed: int, estimator: bool = False,
                    label: str | None = None) -> InstanceFile:
    """
    Seeded instance (H, rho[, T]).

    Args:
        dim: 2 <= dim <= 16
        rank: 1 <= rank <= dim; rank 1 gives a pure state
        seed: master seed, any non-negative integer below 2^64
        estimator: also draw a random Hermitian estimator T

    Returns:
        InstanceFile
    """
    if not 2 <= dim <= MAX_RANDOM_DIM:
        raise ValidationError(f"dim must lie in [2, {MAX_RANDOM_DIM}], got {dim}")
    if not 1 <= rank <= dim:
        raise ValidationError(f"rank must lie in [1, {dim}], got {rank}")
    if not 0 <= seed <= MASK64:
        raise ValidationError(f"seed must be a non-negative 64-bit integer, got {seed}")

    rng = SplitMix64(seed)
    state = rand_rho(rng, dim, rank)
    hamiltonian = rand_herm(rng, dim)
    return InstanceFile(
        hamiltonian=hamiltonian,
        state=state,
        estimator=rand_herm(rng, dim) if estimator else None,
        label=label or f"random-d{dim}-r{rank}-s{seed}",
    )
