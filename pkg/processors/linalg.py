"""
Linear Algebra Module - Hermitian matrix foundation

Validated matrix types (ComplexSquareMatrix -> HermitianOperator ->
DensityMatrix / SqrtState), the principal square root, the Hilbert-Schmidt
pairing and unitary evolution through the eigendecomposition of H.
All values are immutable once constructed.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from processors.exceptions import (
    DimMismatch,
    NonFinite,
    NotHermitian,
    NotNormalized,
    NotPositive,
    NotSquare,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-12
TRACE_TOL = 1e-12
SQRT_NORM_TOL = 1e-10
IMAG_TOL = 1e-12
PURITY_THRESHOLD = 1e-12
DEFAULT_CLAMP_RATIO = 1e-14


@dataclass(frozen=True, eq=False)
class ComplexSquareMatrix:
    """A finite dim x dim complex matrix, stored as a read-only copy"""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.array(self.matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise NotSquare(f"expected a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("matrix has NaN or Inf entries")
        arr = self._validated(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    def _validated(self, arr: np.ndarray) -> np.ndarray:
        return arr

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


class HermitianOperator(ComplexSquareMatrix):
    """||A - A^dagger||_max <= 1e-12 (1 + ||A||_max); stored symmetrised"""

    def _validated(self, arr: np.ndarray) -> np.ndarray:
        arr = super()._validated(arr)
        skew = np.max(np.abs(arr - arr.conj().T))
        if skew > HERMITIAN_TOL * (1.0 + np.max(np.abs(arr))):
            raise NotHermitian(f"matrix is not Hermitian (max |A - A^H| = {skew:.3e})")
        return 0.5 * (arr + arr.conj().T)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh[0]

    def shifted(self, c: float) -> "HermitianOperator":
        return HermitianOperator(self.matrix + c * np.eye(self.dim))

    def scaled(self, factor: float) -> "HermitianOperator":
        return HermitianOperator(factor * self.matrix)

    def conjugated(self, unitary: np.ndarray) -> "HermitianOperator":
        return type(self)(unitary @ self.matrix @ unitary.conj().T)


class DensityMatrix(HermitianOperator):
    """Positive semidefinite, unit trace"""

    def _validated(self, arr: np.ndarray) -> np.ndarray:
        arr = super()._validated(arr)
        trace = np.trace(arr).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise NotNormalized(f"trace of the state is {trace!r}, expected 1")
        smallest = np.linalg.eigvalsh(arr)[0]
        if smallest < -POSITIVITY_TOL:
            raise NotPositive(f"state has a negative eigenvalue {smallest:.3e}")
        return arr

    @property
    def purity(self) -> float:
        return float(np.real(np.sum(self.matrix * self.matrix.T)))

    @property
    def is_pure(self) -> bool:
        return self.purity > 1.0 - PURITY_THRESHOLD


class SqrtState(HermitianOperator):
    """A Hermitian square root xi of a state, |tr(xi^2) - 1| <= 1e-10"""

    def _validated(self, arr: np.ndarray) -> np.ndarray:
        arr = super()._validated(arr)
        norm = np.real(np.sum(arr * arr.T))
        if abs(norm - 1.0) > SQRT_NORM_TOL:
            raise NotNormalized(f"tr(xi^2) = {norm!r}, expected 1")
        return arr

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.matrix @ self.matrix)


def as_array(operator) -> np.ndarray:
    if isinstance(operator, ComplexSquareMatrix):
        return operator.matrix
    return np.asarray(operator, dtype=complex)


def check_same_dim(*operators) -> int:
    dims = {as_array(op).shape[0] for op in operators}
    if len(dims) != 1:
        raise DimMismatch(f"operators have different dimensions: {sorted(dims)}")
    return dims.pop()


def trace_product(a, b) -> complex:
    """tr(AB) without forming the product"""
    a, b = as_array(a), as_array(b)
    return complex(np.sum(a * b.T))


def commutator(a, b) -> np.ndarray:
    a, b = as_array(a), as_array(b)
    return a @ b - b @ a


def principal_sqrt(rho: DensityMatrix, clamp_ratio: float = DEFAULT_CLAMP_RATIO) -> SqrtState:
    """
    Principal (positive) square root of a density matrix.

    Eigenvalues in [-1e-12, clamp_ratio * lambda_max] are set to zero before
    the root is taken.

    Args:
        rho: validated density matrix
        clamp_ratio: relative threshold below which eigenvalues count as zero

    Returns:
        SqrtState: Hermitian PSD xi with xi^2 = rho
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(as_array(rho))

    values, vectors = rho.eigh
    if values[0] < -POSITIVITY_TOL:
        raise NotPositive(f"state has a negative eigenvalue {values[0]:.3e}")

    threshold = clamp_ratio * values[-1]
    clamped = np.where(values <= threshold, 0.0, values)
    dropped = int(np.count_nonzero(clamped != values))
    if dropped:
        logger.debug("clamped %d eigenvalue(s) below %.3e to zero", dropped, threshold)

    root = (vectors * np.sqrt(clamped)) @ vectors.conj().T
    return SqrtState(root)


def hs_inner(a, b) -> float:
    """
    Hilbert-Schmidt pairing Re tr(AB).

    An imaginary part above 1e-12 (1 + |Re|) is logged as a warning; it means
    one of the inputs was not Hermitian.
    """
    check_same_dim(a, b)
    value = trace_product(a, b)
    if abs(value.imag) > IMAG_TOL * (1.0 + abs(value.real)):
        logger.warning("tr(AB) has imaginary part %.3e; inputs are not both Hermitian", value.imag)
    return value.real


def unitary(hamiltonian: HermitianOperator, t: float) -> np.ndarray:
    """exp(-i H t) through the eigendecomposition of H"""
    values, vectors = hamiltonian.eigh
    return (vectors * np.exp(-1j * values * t)) @ vectors.conj().T


def evolve(xi0: SqrtState, hamiltonian: HermitianOperator, t: float) -> SqrtState:
    """xi_t = exp(-iHt) xi_0 exp(iHt)"""
    check_same_dim(xi0, hamiltonian)
    if t == 0:
        return xi0
    u = unitary(hamiltonian, t)
    return SqrtState(u @ xi0.matrix @ u.conj().T)


def expectation(operator, rho) -> float:
    """Re tr(A rho)"""
    check_same_dim(operator, rho)
    return trace_product(operator, rho).real


def variance(operator, rho) -> float:
    """tr(A^2 rho) - tr(A rho)^2"""
    a = as_array(operator)
    mean = expectation(a, rho)
    return trace_product(a @ a, rho).real - mean ** 2
