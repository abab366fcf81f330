"""
Bound Ladder - Higher-order uncertainty bounds from the skew moments

For odd n the ladder term is U_n^2 / N_n with

    N_n = D_2n / D_2n-4                  (D_-2 = 1)
    U_n = (-1)^((n-1)/2) n S_n-1 - sum_k F_n,k U_k,     U_1 = 1

where D_2n is the Hankel determinant of the skew moments and F_n,k the
projection coefficient of xi^(n) on the k-th frame vector. The bound after
order K is half the sum of the terms up to K.
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgWarning, lu_factor

from processors.derivatives import DerivativeSet, centered, hamiltonian_powers, state_derivative
from processors.exceptions import (
    DegenerateSurface,
    InvalidGeometry,
    MissingMoment,
    OrderTooLarge,
    RankSaturated,
    ValidationError,
    ZeroFisherInformation,
)
from processors.linalg import (
    DensityMatrix,
    HermitianOperator,
    SqrtState,
    check_same_dim,
    hs_inner,
    principal_sqrt,
    trace_product,
)
from processors.skew_moments import (
    SkewMomentTable,
    build_moment_table,
    central_moment,
    estimator_pairing,
    level_surface_gradient,
    skew_info_second_kind,
    skew_moment_closed_form,
    wy_skew_information,
)
from utils.helpers import binomial, tolerance_scale
from utils.settings_manager import MAX_DERIVATIVE_ORDER

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
GEOMETRY_SLACK = 1e-9


@dataclass(frozen=True)
class LadderRow:
    order: int
    determinant: float
    norm: float
    numerator: float
    term: float
    cumulative: float


@dataclass(frozen=True)
class BoundLadder:
    """Rows for odd n = 1, 3, ... up to the truncation order"""

    rows: tuple[LadderRow, ...]
    truncation_order: int
    saturation_flag: bool
    requested_order: int

    @property
    def bound(self) -> float:
        return self.rows[-1].cumulative

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.order, r.determinant, r.norm, r.numerator, r.term, r.cumulative) for r in self.rows],
            columns=["n", "D", "N", "U", "term", "cumulative"],
        )


@dataclass(frozen=True, eq=False)
class GeometricReport:
    """Level-surface normal against the curve tangent at one point"""

    t: float
    arc_length: float | None
    angle: float
    normal: HermitianOperator
    tangent: HermitianOperator
    direct_angle: float
    residual: float
    pairing: float
    premise_cosine: float
    invalid_geometry: bool


def _check_odd(n: int, name: str = "n") -> None:
    if n < 1 or n % 2 == 0:
        raise ValidationError(f"{name} must be a positive odd integer, got {n}")


def hankel_matrix(table: SkewMomentTable, n: int) -> np.ndarray:
    """((n+1)/2 x (n+1)/2) matrix with entry (i, j) = S_2n-2i-2j"""
    size = (n + 1) // 2
    return np.array([[table[2 * n - 2 * i - 2 * j] for j in range(size)] for i in range(size)])


def _pivoted_det(matrix: np.ndarray) -> float:
    if matrix.shape == (1, 1):
        return float(matrix[0, 0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(matrix)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    return float((-1) ** swaps * np.prod(np.diag(lu)))


def hankel_determinant(table: SkewMomentTable, n: int) -> float:
    """
    D_2n, the determinant of the skew-moment Hankel matrix of order n.

    Args:
        table: skew moments through order 2n
        n: odd order, or -1 for the empty determinant

    Returns:
        float: D_2n (D_-2 = 1, D_2 = S_2, D_6 = S_6 S_2 - S_4^2)
    """
    if n == -1:
        return 1.0
    _check_odd(n)
    if 2 * n not in table:
        raise MissingMoment(f"D_{2 * n} needs S_{2 * n}; table stops at {table.max_order}")
    return _pivoted_det(hankel_matrix(table, n))


def _rank_threshold(table: SkewMomentTable, n: int, tol: float) -> float:
    if n == 1:
        return tol * table.scale ** 2
    return tol * abs(hankel_determinant(table, n - 2)) * abs(table[2 * n])


def is_saturated(table: SkewMomentTable, n: int, tol: float = RANK_TOL) -> bool:
    """True when xi^(n) is numerically dependent on the lower odd derivatives"""
    return hankel_determinant(table, n) <= _rank_threshold(table, n, tol)


def _require_rank(table: SkewMomentTable, n: int, tol: float) -> None:
    if n == 1 and is_saturated(table, 1, tol):
        raise ZeroFisherInformation(f"S_2 = {table[2]:.3e}: H commutes with the state")
    if is_saturated(table, n, tol):
        raise RankSaturated(f"odd derivative frame saturates at order {n}", order=n)


def frame_norm(table: SkewMomentTable, n: int, tol: float = RANK_TOL) -> float:
    """N_n = D_2n / D_2n-4; RankSaturated when either determinant is numerically zero"""
    _check_odd(n)
    if n > 1:
        _require_rank(table, n - 2, tol)
    _require_rank(table, n, tol)
    return hankel_determinant(table, n) / hankel_determinant(table, n - 2)


def projection_coefficient(table: SkewMomentTable, n: int, k: int, tol: float = RANK_TOL) -> float:
    """
    F_n,k = tr(xi^(n) Psi_k) / tr(Psi_k Psi_k).

    Evaluated as (-1)^((n+k)/2 - 1) / D_2k times D_2k's matrix with its first
    row replaced by (S_n+k, S_n+k-2, ..., S_n+1).
    """
    _check_odd(n)
    _check_odd(k, "k")
    if k > n - 2:
        raise ValidationError(f"projection coefficient needs k <= n - 2, got n={n}, k={k}")
    _require_rank(table, k, tol)

    matrix = hankel_matrix(table, k)
    matrix[0, :] = [table[n + k - 2 * j] for j in range(matrix.shape[1])]
    sign = -1 if ((n + k) // 2 - 1) % 2 else 1
    return sign * _pivoted_det(matrix) / hankel_determinant(table, k)


def _next_numerator(table: SkewMomentTable, n: int, known: dict[int, float], tol: float) -> float:
    lead = (-1) ** ((n - 1) // 2) * n * table[n - 1]
    return lead - sum(projection_coefficient(table, n, k, tol) * known[k] for k in range(1, n - 1, 2))


def _numerators(table: SkewMomentTable, n: int, tol: float) -> dict[int, float]:
    values = {1: 1.0}
    for order in range(3, n + 1, 2):
        values[order] = _next_numerator(table, order, values, tol)
    return values


def numerator(table: SkewMomentTable, n: int, tol: float = RANK_TOL) -> float:
    """U_n from the recursion; U_1 = 1, U_3 = (S_4 - 3 S_2^2) / S_2"""
    _check_odd(n)
    return _numerators(table, n, tol)[n]


def uncertainty_bound(table: SkewMomentTable, K: int, tol: float = RANK_TOL) -> BoundLadder:
    """
    Ladder of bounds (1/2) sum_{n odd <= K} U_n^2 / N_n.

    Rows stop before the first order whose frame norm is numerically zero;
    that order is never divided by and saturation_flag is set.

    Args:
        table: skew moments through order 2K
        K: odd truncation order
        tol: relative rank tolerance

    Returns:
        BoundLadder
    """
    _check_odd(K, "K")
    if 2 * K > table.max_order:
        raise MissingMoment(f"order {K} needs moments through {2 * K}; table stops at {table.max_order}")
    if is_saturated(table, 1, tol):
        raise ZeroFisherInformation(f"S_2 = {table[2]:.3e}: H commutes with the state")

    rows: list[LadderRow] = []
    numerators = {1: 1.0}
    cumulative = 0.0
    saturated = False
    for n in range(1, K + 1, 2):
        if is_saturated(table, n, tol):
            logger.info("ladder truncated at order %d: frame saturates at order %d", n - 2, n)
            saturated = True
            break
        if n > 1:
            numerators[n] = _next_numerator(table, n, numerators, tol)
        determinant = hankel_determinant(table, n)
        norm = determinant / hankel_determinant(table, n - 2)
        term = numerators[n] ** 2 / norm
        cumulative += 0.5 * term
        rows.append(LadderRow(n, determinant, norm, numerators[n], term, cumulative))

    return BoundLadder(tuple(rows), rows[-1].order, saturated, K)


def third_order_bound(table: SkewMomentTable, tol: float = RANK_TOL) -> float:
    """(1 / (2 S_2)) [1 + (S_4 - 3 S_2^2)^2 / (S_6 S_2 - S_4^2)]"""
    _require_rank(table, 1, tol)
    s2, s4, s6 = table[2], table[4], table[6]
    denominator = s6 * s2 - s4 ** 2
    if denominator <= tol * abs(s6 * s2):
        raise RankSaturated(f"S_6 S_2 - S_4^2 = {denominator:.3e} vanishes", order=3)
    return (1.0 + (s4 - 3.0 * s2 ** 2) ** 2 / denominator) / (2.0 * s2)


def central_moment_bound(hamiltonian: HermitianOperator, rho: DensityMatrix, tol: float = RANK_TOL) -> float:
    """
    Third-order bound with ordinary central moments in place of skew moments,
    (1 / (4 mu_2)) [1 + (mu_4 - 3 mu_2^2)^2 / (mu_6 mu_2 - mu_4^2)].

    The two bounds agree only at first order, even for pure states.
    """
    mu2, mu4, mu6 = (central_moment(hamiltonian, rho, k) for k in (2, 4, 6))
    if mu2 <= tol * tolerance_scale(hamiltonian.matrix, 2):
        raise ZeroFisherInformation(f"variance {mu2:.3e} vanishes")
    denominator = mu6 * mu2 - mu4 ** 2
    if denominator <= tol * abs(mu6 * mu2):
        raise RankSaturated(f"mu_6 mu_2 - mu_4^2 = {denominator:.3e} vanishes", order=3)
    return (1.0 + (mu4 - 3.0 * mu2 ** 2) ** 2 / denominator) / (4.0 * mu2)


def pairing_identity_check(dset: DerivativeSet, m: int, cap: int = MAX_DERIVATIVE_ORDER) -> tuple[float, float]:
    """
    Both sides of the estimator-free pairing identity at order 2m+1.

    lhs = sum_{a=0}^{m} (-1)^(m+1-a) C(2m+1, a)
              [a tr(H^(a-1) xi H^(2m+1-a) xi) - (2m+1-a) tr(H^(2m-a) xi H^a xi)]
    rhs = (-1)^m (2m+1) S_2m

    Returns:
        tuple: (lhs, rhs)
    """
    if m < 0:
        raise ValidationError(f"m must be non-negative, got {m}")
    if 2 * m + 1 > cap:
        raise OrderTooLarge(f"order {2 * m + 1} exceeds the cap {cap}")

    h = centered(dset.hamiltonian, dset.xi)
    x = dset.xi.matrix
    powers = hamiltonian_powers(h, 2 * m + 1)

    def pair(a: int, b: int) -> float:
        return trace_product(powers[a] @ x, powers[b] @ x).real

    lhs = 0.0
    for a in range(m + 1):
        first = a * pair(a - 1, 2 * m + 1 - a) if a else 0.0
        second = (2 * m + 1 - a) * pair(2 * m - a, a)
        lhs += (-1) ** (m + 1 - a) * binomial(2 * m + 1, a) * (first - second)

    rhs = (-1) ** m * (2 * m + 1) * skew_moment_closed_form(HermitianOperator(h), dset.xi, 2 * m)
    return lhs, rhs


def arc_length(table: SkewMomentTable, t: float) -> float:
    """s(t) = sqrt(S_2) t"""
    if t < 0:
        raise ValidationError(f"arc length needs t >= 0, got {t}")
    return math.sqrt(max(table[2], 0.0)) * t


def _unit(operator: np.ndarray) -> HermitianOperator:
    return HermitianOperator(operator / math.sqrt(trace_product(operator, operator).real))


def estimation_angle(estimator: HermitianOperator, rho: DensityMatrix, hamiltonian: HermitianOperator,
                     t: float | None = None, strict: bool = False, tol: float = RANK_TOL,
                     xi: SqrtState | None = None) -> GeometricReport:
    """
    Angle between the level-surface normal of T and the tangent of the curve.

    Args:
        estimator: T
        rho: state on the curve
        hamiltonian: H
        t: value of the level surface, also the mean in the T spread;
            defaults to tr(T rho). The arc length is left out for t < 0
        strict: raise InvalidGeometry instead of flagging it
        xi: square root to use in place of the principal one

    Returns:
        GeometricReport: angle from the pairing kappa = tr(rho i[H, T]),
        cross-checked against arccos(|n . e1|) computed from the vectors
    """
    check_same_dim(estimator, rho, hamiltonian)
    if xi is None:
        xi = principal_sqrt(rho)
    mean = trace_product(estimator, xi.matrix @ xi.matrix).real
    if t is None:
        t = mean

    dispersion = skew_info_second_kind(estimator, rho, xi)
    spread_h = wy_skew_information(hamiltonian, rho, xi)
    if dispersion <= tol * tolerance_scale(estimator.matrix, 2):
        raise DegenerateSurface("estimator has no dispersion; its level surfaces are degenerate")
    if spread_h <= tol * tolerance_scale(hamiltonian.matrix, 2):
        raise DegenerateSurface("H has no skew information; the curve does not move")

    gradient = level_surface_gradient(estimator, xi, t)
    # |g_t|^2 / 2 = tr(T^2 rho) + tr(T xi T xi) - 4t tr(T rho) + 2t^2
    spread_t = 0.5 * trace_product(gradient, gradient).real
    normal = _unit(gradient)
    tangent = _unit(state_derivative(xi, hamiltonian, 1).matrix)
    direct = math.acos(min(abs(hs_inner(normal, tangent)), 1.0))

    spread = 2.0 * math.sqrt(spread_t * spread_h)
    kappa = estimator_pairing(estimator, hamiltonian, rho)
    angle = math.acos(min(abs(kappa) / spread, 1.0))
    premise = 1.0 / spread
    invalid = premise > 1.0 + GEOMETRY_SLACK
    if invalid:
        message = f"T spread at t times (dH^2 - deltaH^2) = {(spread / 2) ** 2:.6g} is below 1/4"
        if strict:
            raise InvalidGeometry(message)
        logger.info("%s; estimator is not unbiased for this family", message)

    length = None
    if t >= 0:
        length = arc_length(build_moment_table(hamiltonian, xi, 2), t)
    else:
        logger.info("no arc length for t = %.6g < 0", t)

    return GeometricReport(
        t=t,
        arc_length=length,
        angle=angle,
        normal=normal,
        tangent=tangent,
        direct_angle=direct,
        residual=abs(angle - direct),
        pairing=kappa,
        premise_cosine=premise,
        invalid_geometry=invalid,
    )
