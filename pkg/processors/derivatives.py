"""
Derivative Engine - Derivatives of the unitary curve xi_t = e^{-iHt} xi e^{iHt}

The n-th derivative is evaluated from the commutator-binomial expansion

    xi^(n) = (-i)^n sum_k (-1)^k C(n, k) H^(n-k) xi H^k

with the powers of H tabulated once per DerivativeSet.
"""
import logging
from dataclasses import dataclass

import numpy as np

from processors.exceptions import OrderTooLarge, ValidationError
from processors.linalg import (
    HermitianOperator,
    SqrtState,
    check_same_dim,
    evolve,
    trace_product,
)
from utils.helpers import binomial, centered_spectral_norm
from utils.settings_manager import MAX_DERIVATIVE_ORDER

logger = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-10


def hamiltonian_powers(hamiltonian: np.ndarray, max_order: int) -> list[np.ndarray]:
    """[I, H, H^2, ..., H^max_order]"""
    powers = [np.eye(hamiltonian.shape[0], dtype=complex)]
    for _ in range(max_order):
        powers.append(powers[-1] @ hamiltonian)
    return powers


def centered(hamiltonian: HermitianOperator, xi: SqrtState) -> np.ndarray:
    """H - tr(H xi^2) I; every derivative depends on H only through commutators"""
    h = hamiltonian.matrix
    mean = trace_product(h, xi.matrix @ xi.matrix).real
    return h - mean * np.eye(hamiltonian.dim)


def expand_derivative(xi: np.ndarray, powers: list[np.ndarray], n: int) -> np.ndarray:
    """Raw (unsymmetrised) evaluation of the binomial expansion"""
    total = np.zeros_like(xi, dtype=complex)
    for k in range(n + 1):
        total += ((-1) ** k * binomial(n, k)) * (powers[n - k] @ xi @ powers[k])
    return (-1j) ** n * total


def _check_order(n: int, cap: int) -> None:
    if n < 0:
        raise ValidationError(f"derivative order must be non-negative, got {n}")
    if n > cap:
        raise OrderTooLarge(f"derivative order {n} exceeds the cap {cap}")


def _hermitian_part(raw: np.ndarray, n: int, scale: float) -> np.ndarray:
    skew = float(np.max(np.abs(raw - raw.conj().T))) if raw.size else 0.0
    if skew > HERMITICITY_TOL * scale ** n:
        logger.warning("derivative of order %d departs from Hermiticity by %.3e", n, skew)
    return 0.5 * (raw + raw.conj().T)


def state_derivative(xi: SqrtState, hamiltonian: HermitianOperator, n: int,
                     cap: int = MAX_DERIVATIVE_ORDER) -> HermitianOperator:
    """
    n-th time derivative of xi_t at t = 0.

    Args:
        xi: square-root state
        hamiltonian: generator H
        n: derivative order, 0 <= n <= cap

    Returns:
        HermitianOperator: xi^(n)
    """
    check_same_dim(xi, hamiltonian)
    _check_order(n, cap)
    h = centered(hamiltonian, xi)
    powers = hamiltonian_powers(h, n)
    scale = 1.0 + centered_spectral_norm(hamiltonian.matrix)
    raw = expand_derivative(xi.matrix, powers, n)
    return HermitianOperator(_hermitian_part(raw, n, scale))


@dataclass(frozen=True, eq=False)
class DerivativeSet:
    """xi and its derivatives 0..max_order along the curve generated by H"""

    xi: SqrtState
    hamiltonian: HermitianOperator
    max_order: int
    derivatives: tuple[HermitianOperator, ...]
    scale: float

    @classmethod
    def build(cls, xi: SqrtState, hamiltonian: HermitianOperator, max_order: int,
              cap: int = MAX_DERIVATIVE_ORDER) -> "DerivativeSet":
        check_same_dim(xi, hamiltonian)
        _check_order(max_order, cap)
        h = centered(hamiltonian, xi)
        powers = hamiltonian_powers(h, max_order)
        scale = 1.0 + centered_spectral_norm(hamiltonian.matrix)

        derivatives = [xi]
        for n in range(1, max_order + 1):
            raw = expand_derivative(xi.matrix, powers, n)
            derivatives.append(HermitianOperator(_hermitian_part(raw, n, scale)))
        return cls(xi, hamiltonian, max_order, tuple(derivatives), scale)

    @property
    def dim(self) -> int:
        return self.xi.dim

    def __getitem__(self, n: int) -> HermitianOperator:
        _check_order(n, self.max_order)
        return self.derivatives[n]

    def tolerance(self, order_sum: int, base: float = 1e-10) -> float:
        """base * scale^order_sum"""
        return base * self.scale ** order_sum


def derivative_inner(dset: DerivativeSet, m: int, n: int) -> float:
    """tr(xi^(m) xi^(n)); vanishes when m + n is odd"""
    return trace_product(dset[m], dset[n]).real


def _central_difference(samples: dict[int, np.ndarray], n: int, h: float) -> np.ndarray:
    if n == 1:
        return (samples[1] - samples[-1]) / (2 * h)
    if n == 2:
        return (samples[1] - 2 * samples[0] + samples[-1]) / h ** 2
    if n == 3:
        return (samples[2] - 2 * samples[1] + 2 * samples[-1] - samples[-2]) / (2 * h ** 3)
    return (samples[2] - 4 * samples[1] + 6 * samples[0] - 4 * samples[-1] + samples[-2]) / h ** 4


def finite_difference_check(xi0: SqrtState, hamiltonian: HermitianOperator, n: int, h: float) -> float:
    """
    Compare the closed-form derivative with an O(h^2) central difference.

    Args:
        xi0: state at t = 0
        hamiltonian: generator H
        n: derivative order, 1..4
        h: step, in [1e-4, 1e-1]

    Returns:
        float: max elementwise deviation between the two
    """
    if not 1 <= n <= 4:
        raise ValidationError(f"finite-difference check supports orders 1..4, got {n}")
    if not 1e-4 <= h <= 1e-1:
        raise ValidationError(f"step {h} outside [1e-4, 1e-1]")

    samples = {j: evolve(xi0, hamiltonian, j * h).matrix for j in (-2, -1, 0, 1, 2)}
    estimate = _central_difference(samples, n, h)
    exact = state_derivative(xi0, hamiltonian, n).matrix
    return float(np.max(np.abs(exact - estimate)))
