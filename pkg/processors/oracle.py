"""
Oracle - Brute-force Gram-Schmidt path used to cross-check the closed forms

Hermitian d x d operators are mapped to real vectors of length d^2 whose
Euclidean dot product is the Hilbert-Schmidt pairing. The derivative
sequence is orthogonalized there with modified Gram-Schmidt plus one full
reorthogonalization pass, separately within the even and the odd sector.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from processors.derivatives import DerivativeSet
from processors.exceptions import IncompleteFrame, RankSaturated, ValidationError
from processors.linalg import HermitianOperator, SqrtState, as_array, check_same_dim
from processors.skew_moments import level_surface_gradient

logger = logging.getLogger(__name__)

FRAME_TOL = 1e-20
COMPLETION_TOL = 1e-8
ORTHONORMAL_TOL = 1e-8


class RealVectorization:
    """Orthonormal real coordinates for d x d Hermitian operators"""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValidationError(f"dimension must be positive, got {dim}")
        self.dim = dim
        self.rows, self.cols = np.triu_indices(dim, 1)

    @property
    def size(self) -> int:
        return self.dim ** 2

    def coords(self, operator) -> np.ndarray:
        """
        Coordinates of A: the diagonal, then sqrt(2) (Re A_ij, Im A_ij) for
        each i < j in row-major order.
        """
        a = as_array(operator)
        if a.shape != (self.dim, self.dim):
            raise ValidationError(f"expected a {self.dim} x {self.dim} operator, got {a.shape}")
        upper = a[self.rows, self.cols]
        off = math.sqrt(2.0) * np.column_stack([upper.real, upper.imag]).ravel()
        return np.concatenate([np.diag(a).real, off])

    def operator(self, coords: np.ndarray) -> HermitianOperator:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.size,):
            raise ValidationError(f"expected {self.size} coordinates, got {coords.shape}")
        d = self.dim
        pairs = coords[d:].reshape(-1, 2) / math.sqrt(2.0)
        a = np.diag(coords[:d]).astype(complex)
        a[self.rows, self.cols] = pairs[:, 0] + 1j * pairs[:, 1]
        a[self.cols, self.rows] = pairs[:, 0] - 1j * pairs[:, 1]
        return HermitianOperator(a)

    @property
    def basis(self) -> list[HermitianOperator]:
        """The d^2 operators whose coordinates are the unit vectors, in coordinate order"""
        return [self.operator(e) for e in np.eye(self.size)]


@dataclass(frozen=True, eq=False)
class OrthogonalFrame:
    """
    Orthogonal Psi vectors with their squared norms.

    source_orders[i] is the derivative order Psi_i was built from, or None for
    a vector added by completion. coefficients[i] expresses Psi_i over the
    derivatives, {order: c}.
    """

    vectorization: RealVectorization
    vectors: tuple[HermitianOperator, ...]
    norms: tuple[float, ...]
    source_orders: tuple[int | None, ...]
    saturated: tuple[int, ...] = ()
    coefficients: tuple[dict[int, float], ...] = ()
    sector_leakage: float = 0.0
    max_order: int = 0
    complete: bool = field(default=False)

    def __len__(self) -> int:
        return len(self.vectors)

    def index_of(self, order: int) -> int:
        try:
            return self.source_orders.index(order)
        except ValueError:
            if order in self.saturated:
                raise RankSaturated(f"derivative of order {order} was dropped as dependent", order=order) from None
            raise ValidationError(f"frame was built through order {self.max_order}, Psi_{order} requested") from None

    def norm(self, order: int) -> float:
        """||Psi_order||^2"""
        return self.norms[self.index_of(order)]

    def odd_determinant(self, n: int) -> float:
        """Product of ||Psi_k||^2 over odd k <= n: the Gram determinant of xi^(1), xi^(3), ..., xi^(n)"""
        return math.prod(self.norm(k) for k in range(1, n + 1, 2))


def _orthogonalize(v: np.ndarray, c: np.ndarray, against: list[tuple[np.ndarray, np.ndarray, float]]):
    for _ in range(2):
        for u, cu, norm in against:
            r = float(v @ u) / norm
            v = v - r * u
            if c is not None:
                c = c - r * cu
    return v, c


def build_frame(dset: DerivativeSet, max_n: int, odd_only: bool = False, tol: float = FRAME_TOL) -> OrthogonalFrame:
    """
    Gram-Schmidt over xi, xi^(1), ..., xi^(max_n).

    Psi_0 = xi always. Each derivative is orthogonalized only against earlier
    vectors of its own parity; the overlap with the other sector is measured
    and kept as sector_leakage. A derivative whose residual norm^2 falls to
    tol times its original norm^2 is dropped and listed in saturated, as is
    one whose norm^2 is below tol scale^2n to begin with.

    Args:
        dset: derivatives through max_n
        max_n: highest order consumed
        odd_only: consume only n = 1, 3, 5, ...
        tol: saturation threshold on the norm^2 ratio

    Returns:
        OrthogonalFrame
    """
    if max_n > dset.max_order:
        raise ValidationError(f"derivative set stops at order {dset.max_order}, frame needs {max_n}")
    vec = RealVectorization(dset.dim)

    sectors: dict[int, list[tuple[np.ndarray, np.ndarray, float]]] = {0: [], 1: []}
    kept: list[tuple[int, np.ndarray, np.ndarray, float]] = []
    saturated: list[int] = []
    leakage = 0.0

    orders = range(1, max_n + 1, 2) if odd_only else range(1, max_n + 1)
    for n in [0, *orders]:
        v = vec.coords(dset[n])
        c = np.zeros(max_n + 1)
        c[n] = 1.0
        pre = float(v @ v)
        if pre <= tol * dset.scale ** (2 * n):
            logger.debug("order %d vanishes (norm^2 %.3e)", n, pre)
            saturated.append(n)
            continue

        for u, _, norm in sectors[1 - n % 2]:
            leakage = max(leakage, abs(float(v @ u)) / math.sqrt(pre * norm))

        v, c = _orthogonalize(v, c, sectors[n % 2])
        post = float(v @ v)
        if post <= tol * pre:
            logger.debug("order %d saturated (norm^2 ratio %.3e)", n, post / pre)
            saturated.append(n)
            continue
        sectors[n % 2].append((v, c, post))
        kept.append((n, v, c, post))

    if leakage > ORTHONORMAL_TOL:
        logger.warning("odd/even sector leakage %.3e", leakage)

    return OrthogonalFrame(
        vectorization=vec,
        vectors=tuple(vec.operator(v) for _, v, _, _ in kept),
        norms=tuple(norm for _, _, _, norm in kept),
        source_orders=tuple(n for n, _, _, _ in kept),
        saturated=tuple(saturated),
        coefficients=tuple({j: float(cj) for j, cj in enumerate(c) if cj != 0.0} for _, _, c, _ in kept),
        sector_leakage=leakage,
        max_order=max_n,
    )


def complete_frame(frame: OrthogonalFrame, vec: RealVectorization | None = None) -> OrthogonalFrame:
    """
    Extend the frame to d^2 orthogonal vectors.

    Canonical coordinate vectors are appended in order, orthogonalized against
    everything kept so far, and dropped when their residual norm^2 is below
    1e-8.
    """
    vec = vec or frame.vectorization
    if vec.dim != frame.vectorization.dim:
        raise ValidationError(f"vectorization is for dim {vec.dim}, frame is dim {frame.vectorization.dim}")

    against = [(vec.coords(psi), None, norm) for psi, norm in zip(frame.vectors, frame.norms)]
    added: list[tuple[np.ndarray, float]] = []
    for e in np.eye(vec.size):
        if len(against) == vec.size:
            break
        v, _ = _orthogonalize(e, None, against)
        post = float(v @ v)
        if post <= COMPLETION_TOL:
            continue
        against.append((v, None, post))
        added.append((v, post))

    return OrthogonalFrame(
        vectorization=vec,
        vectors=frame.vectors + tuple(vec.operator(v) for v, _ in added),
        norms=frame.norms + tuple(norm for _, norm in added),
        source_orders=frame.source_orders + (None,) * len(added),
        saturated=frame.saturated,
        coefficients=frame.coefficients + ({},) * len(added),
        sector_leakage=frame.sector_leakage,
        max_order=frame.max_order,
        complete=len(against) == vec.size,
    )


def _check_complete(frame: OrthogonalFrame) -> None:
    vec = frame.vectorization
    if len(frame) != vec.size:
        raise IncompleteFrame(f"frame has {len(frame)} vectors, completeness needs {vec.size}")
    units = np.array([vec.coords(psi) / math.sqrt(norm) for psi, norm in zip(frame.vectors, frame.norms)])
    defect = float(np.max(np.abs(units @ units.T - np.eye(vec.size))))
    if defect > ORTHONORMAL_TOL:
        raise IncompleteFrame(f"normalized frame departs from orthonormal by {defect:.3e}")


def parseval_decomposition(estimator: HermitianOperator, xi: SqrtState, full_frame: OrthogonalFrame) -> list[float]:
    """
    Terms (1/2) tr(g Psi_n)^2 / tr(Psi_n Psi_n) of the level-surface gradient
    g = xi T + T xi - 2 tr(T xi^2) xi over a complete frame.

    The terms sum to the second-kind skew information of T.
    """
    check_same_dim(estimator, xi)
    _check_complete(full_frame)
    g = full_frame.vectorization.coords(level_surface_gradient(estimator, xi))
    vec = full_frame.vectorization
    return [0.5 * float(g @ vec.coords(psi)) ** 2 / norm for psi, norm in zip(full_frame.vectors, full_frame.norms)]


def numerator_oracle(dset: DerivativeSet, frame: OrthogonalFrame, m: int) -> float:
    """
    U_2m+1 as the pairing of Psi_2m+1 with xi T + T xi.

    Psi_2m+1 = sum_j c_j xi^(j) over odd j, and each tr(xi^(j) (xi T + T xi))
    equals (-1)^((j-1)/2) j S_j-1 whatever T is. S_j-1 is taken from the
    derivative norms ||xi^((j-1)/2)||^2.
    """
    if m < 0:
        raise ValidationError(f"m must be non-negative, got {m}")
    n = 2 * m + 1
    coefficients = frame.coefficients[frame.index_of(n)]
    if max(coefficients) // 2 > dset.max_order:
        raise ValidationError(f"derivative set stops at order {dset.max_order}")

    def pairing(j: int) -> float:
        a = (j - 1) // 2
        moment = 1.0 if a == 0 else float(np.sum(np.abs(dset[a].matrix) ** 2))
        return (-1) ** a * j * moment

    return sum(c * pairing(j) for j, c in coefficients.items())
