"""
Skew Moments Module - Skew informations and even-order quantum skew moments

The closed form of S_2m is the symmetric binomial sum

    S_2p = 2 sum_{k<p} (-1)^k C(2p, k) tr(H^(2p-k) xi H^k xi)
           + (-1)^p C(2p, p) tr(H^p xi H^p xi),        S_0 = 1,

which equals ||xi^(p)||^2. The oracle path reads the same number off a pair
of derivatives, S_{n+m} = (-1)^((n+m)/2 + m) tr(xi^(n) xi^(m)).
"""
import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
import pandas as pd

from processors.derivatives import DerivativeSet, derivative_inner, hamiltonian_powers
from processors.exceptions import (
    MissingMoment,
    OddOrder,
    OddOrderSum,
    OrderTooLarge,
    ValidationError,
)
from processors.linalg import (
    DensityMatrix,
    HermitianOperator,
    SqrtState,
    as_array,
    check_same_dim,
    commutator,
    expectation,
    principal_sqrt,
    trace_product,
)
from utils.helpers import binomial, centered_spectral_norm
from utils.settings_manager import MAX_MOMENT_ORDER

logger = logging.getLogger(__name__)


def _root_of(rho, xi: SqrtState | None = None) -> tuple[np.ndarray, np.ndarray]:
    if xi is not None:
        x = xi.matrix
        return x, x @ x
    if isinstance(rho, SqrtState):
        return rho.matrix, rho.matrix @ rho.matrix
    return principal_sqrt(rho).matrix, as_array(rho)


def _mean_adjusted(operator, state: np.ndarray) -> np.ndarray:
    a = as_array(operator)
    return a - trace_product(a, state).real * np.eye(a.shape[0])


def wy_skew_information(hamiltonian: HermitianOperator, rho: DensityMatrix,
                        xi: SqrtState | None = None) -> float:
    """
    Wigner-Yanase skew information tr(H^2 rho) - tr(H sqrt(rho) H sqrt(rho)).

    Evaluated with H shifted to zero mean, which leaves the value unchanged.
    """
    check_same_dim(hamiltonian, rho)
    root, state = _root_of(rho, xi)
    h = _mean_adjusted(hamiltonian, state)
    return trace_product(h @ h, state).real - trace_product(h @ root, h @ root).real


def skew_dispersion(operator: HermitianOperator, rho: DensityMatrix,
                    xi: SqrtState | None = None) -> float:
    """delta A^2 = tr(A xi A xi) - tr(A rho)^2; zero for pure states"""
    check_same_dim(operator, rho)
    root, state = _root_of(rho, xi)
    a = as_array(operator)
    mean = trace_product(a, state).real
    return trace_product(a @ root, a @ root).real - mean ** 2


def skew_info_second_kind(estimator: HermitianOperator, rho: DensityMatrix,
                          xi: SqrtState | None = None) -> float:
    """
    Skew information of the second kind, tr(T^2 rho) + tr(T xi T xi) - 2 tr(T rho)^2.

    Equals Delta T^2 + delta T^2: the variance for pure states, strictly more
    for mixed ones.
    """
    check_same_dim(estimator, rho)
    root, state = _root_of(rho, xi)
    t = _mean_adjusted(estimator, state)
    return trace_product(t @ t, state).real + trace_product(t @ root, t @ root).real


def estimator_pairing(estimator: HermitianOperator, hamiltonian: HermitianOperator,
                      rho: DensityMatrix) -> float:
    """kappa = tr(rho i[H, T]); 1 for an estimator with i[H, T] = 1"""
    check_same_dim(estimator, hamiltonian, rho)
    generator = 1j * commutator(hamiltonian, estimator)
    return trace_product(as_array(rho), generator).real


def level_surface_gradient(estimator: HermitianOperator, xi: SqrtState,
                           t: float | None = None) -> np.ndarray:
    """xi T + T xi - 2 t xi, the normal to the level surface tr(T xi^2) = t"""
    check_same_dim(estimator, xi)
    x = xi.matrix
    a = as_array(estimator)
    if t is None:
        t = trace_product(a, x @ x).real
    return x @ a + a @ x - 2.0 * t * x


def grad_norm_sq(estimator: HermitianOperator, xi: SqrtState) -> float:
    """Squared HS norm of the level-surface gradient; twice the second-kind skew information"""
    grad = level_surface_gradient(estimator, xi)
    return trace_product(grad, grad).real


def _check_even_order(order: int, cap: int) -> None:
    if order < 0:
        raise ValidationError(f"moment order must be non-negative, got {order}")
    if order % 2:
        raise OddOrder(f"skew moments exist only for even orders, got {order}")
    if order > cap:
        raise OrderTooLarge(f"moment order {order} exceeds the cap {cap}")


def closed_form_sum(h: np.ndarray, x: np.ndarray, order: int,
                    powers: list[np.ndarray] | None = None) -> float:
    """S_order on raw arrays; powers may be shared across orders"""
    if order == 0:
        return 1.0
    p = order // 2
    if powers is None:
        powers = hamiltonian_powers(h, order)

    def pair(k: int) -> float:
        return trace_product(powers[order - k] @ x, powers[k] @ x).real

    total = 2.0 * sum((-1) ** k * binomial(order, k) * pair(k) for k in range(p))
    return total + (-1) ** p * binomial(order, p) * pair(p)


def skew_moment_closed_form(hamiltonian: HermitianOperator, xi: SqrtState, order: int,
                            cap: int = MAX_MOMENT_ORDER) -> float:
    """
    Even-order skew central moment from the closed-form binomial sum.

    Args:
        hamiltonian: H
        xi: square-root state
        order: even order 2m, 0 <= 2m <= cap

    Returns:
        float: S_2m (S_0 = 1, S_2 = twice the Wigner-Yanase skew information)
    """
    check_same_dim(hamiltonian, xi)
    _check_even_order(order, cap)
    return closed_form_sum(hamiltonian.matrix, xi.matrix, order)


def split_sign(n: int, m: int) -> int:
    """Sign relating tr(xi^(n) xi^(m)) to S_{n+m}"""
    return -1 if ((n + m) // 2 + m) % 2 else 1


def canonical_split(order: int) -> tuple[int, int]:
    """An odd-odd split of an even order (p, p) or (p+1, p-1); (0, 0) for order 0"""
    p = order // 2
    if order == 0:
        return 0, 0
    return (p, p) if p % 2 else (p + 1, p - 1)


def skew_moment_oracle(dset: DerivativeSet, n: int, m: int) -> float:
    """
    S_{n+m} read off the derivative pairing tr(xi^(n) xi^(m)).

    For odd n and m the sign is + when n+m = 2 (mod 4) and - when n+m = 0
    (mod 4); for even splits it flips, so every split gives the same value.
    """
    if (n + m) % 2:
        raise OddOrderSum(f"n + m = {n + m} is odd; skew moments need an even order sum")
    return split_sign(n, m) * derivative_inner(dset, n, m)


def central_moment(hamiltonian: HermitianOperator, rho: DensityMatrix, n: int) -> float:
    """tr((H - <H>)^n rho)"""
    if n < 1:
        raise ValidationError(f"central moment order must be >= 1, got {n}")
    check_same_dim(hamiltonian, rho)
    state = as_array(rho)
    h = _mean_adjusted(hamiltonian, state)
    return trace_product(np.linalg.matrix_power(h, n), state).real


@dataclass(frozen=True, eq=False)
class SkewMomentTable:
    """S_0..S_2M for one (H, xi) pair"""

    hamiltonian: HermitianOperator
    xi: SqrtState
    moments: Mapping[int, float]
    max_order: int
    preshift: bool = True
    scale: float = field(default=1.0)

    def __getitem__(self, order: int) -> float:
        try:
            return self.moments[order]
        except KeyError:
            raise MissingMoment(f"table holds orders up to {self.max_order}, S_{order} requested") from None

    def __contains__(self, order: int) -> bool:
        return order in self.moments

    @property
    def orders(self) -> list[int]:
        return sorted(self.moments)

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"order": self.orders, "S": [self.moments[o] for o in self.orders]})


def build_moment_table(hamiltonian: HermitianOperator, xi: SqrtState, max_order: int,
                       preshift: bool = True, cap: int = MAX_MOMENT_ORDER) -> SkewMomentTable:
    """
    Tabulate S_0..S_max_order from the closed form.

    Args:
        hamiltonian: H
        xi: square-root state
        max_order: even 2M
        preshift: replace H by H - tr(H rho) I first (same moments, better conditioned powers)

    Returns:
        SkewMomentTable
    """
    check_same_dim(hamiltonian, xi)
    _check_even_order(max_order, cap)

    h = hamiltonian.matrix
    x = xi.matrix
    if preshift:
        h = h - expectation(h, x @ x) * np.eye(hamiltonian.dim)
    powers = hamiltonian_powers(h, max_order)

    moments = {order: closed_form_sum(h, x, order, powers) for order in range(0, max_order + 1, 2)}
    moments[0] = 1.0
    return SkewMomentTable(
        hamiltonian=hamiltonian,
        xi=xi,
        moments=MappingProxyType(moments),
        max_order=max_order,
        preshift=preshift,
        scale=1.0 + centered_spectral_norm(hamiltonian.matrix),
    )
