"""
Verifier - Runs the cross-module property battery on seeded random instances

Each trial draws (rho, H, T, U) from its own child seed and checks the
closed forms against the brute-force oracle plus the invariances the skew
moments and bounds must satisfy. Moment deviations are measured in units of
scale^order with scale = 1 + ||H - mean||_2; bound deviations are relative.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from processors.bound_ladder import (
    central_moment_bound,
    hankel_determinant,
    pairing_identity_check,
    third_order_bound,
    uncertainty_bound,
)
from processors.derivatives import DerivativeSet, derivative_inner
from processors.exceptions import DegenerateInstance, RankSaturated, ValidationError
from processors.linalg import HermitianOperator, SqrtState, evolve, principal_sqrt, variance
from processors.oracle import build_frame, complete_frame, numerator_oracle, parseval_decomposition
from processors.skew_moments import (
    build_moment_table,
    grad_norm_sq,
    skew_dispersion,
    skew_info_second_kind,
    skew_moment_oracle,
    wy_skew_information,
)
from utils.helpers import relative_deviation
from utils.random_instances import SplitMix64, child_seeds, rand_herm, rand_rho, rand_unitary
from utils.settings_manager import DEFAULT_SETTINGS, Settings

logger = logging.getLogger(__name__)

# property -> largest allowed deviation
PROPERTY_TOLERANCES: dict[str, float] = {
    "moment_equivalence": 1e-9,
    "odd_vanishing": 1e-10,
    "norm_crosscheck": 1e-8,
    "determinant_crosscheck": 1e-8,
    "numerator_crosscheck": 1e-8,
    "pairing_identity": 1e-9,
    "third_order": 1e-10,
    "parseval": 1e-10,
    "parseval_zero_term": 1e-12,
    "wy_identity": 1e-12,
    "first_order": 1e-10,
    "pure_reduction": 1e-10,
    "ladder_monotonic": 0.0,
    "shift_invariance": 1e-8,
    "scale_covariance": 1e-8,
    "unitary_covariance": 1e-8,
    "time_invariance": 1e-8,
    "qubit_collapse": 1e-9,
    "finite_output": 0.0,
}
# property -> threshold the value must exceed
SEPARATION_THRESHOLDS: dict[str, float] = {
    "pure_nonreduction": 1e-6,
}

SHIFT_FRACTION = 0.5
SCALE_FACTOR = 1.7
TIME_STEP = 0.37


@dataclass
class TrialResult:
    index: int
    dim: int
    rank: int
    seed: int
    deviations: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class PropertySummary:
    runs: int = 0
    failures: int = 0
    worst: float = 0.0
    worst_seed: int | None = None


@dataclass
class VerificationSummary:
    trials: list[TrialResult]
    properties: dict[str, PropertySummary]

    @property
    def passed(self) -> bool:
        return all(trial.passed for trial in self.trials)

    @property
    def failed_trials(self) -> list[TrialResult]:
        return [trial for trial in self.trials if not trial.passed]


class PropertyVerifier:
    """Checks every cross-module property on one instance at a time"""

    def __init__(self, settings: Settings = DEFAULT_SETTINGS, depth: int | None = None):
        self.settings = settings
        self.depth = depth if depth is not None else settings.ladder_depth
        if self.depth < 1 or self.depth % 2 == 0:
            raise ValidationError(f"depth must be a positive odd integer, got {self.depth}")
        settings.check_moment_order(2 * self.depth)
        settings.check_derivative_order(2 * self.depth + 1)

    def run(self, dims: list[int], trials: int, seed: int, workers: int | None = None) -> VerificationSummary:
        """
        Run `trials` trials for every dimension in `dims`.

        Trial i (counted across all dims) uses the i-th child seed of `seed`;
        results come back in trial order whatever the scheduling.
        """
        if trials < 1:
            raise ValidationError(f"trials must be positive, got {trials}")
        if not dims or any(d < 2 for d in dims):
            raise ValidationError(f"dims must be integers >= 2, got {dims}")

        seeds = child_seeds(seed, len(dims) * trials)
        jobs = [(i, dims[i // trials], s) for i, s in enumerate(seeds)]
        workers = workers or self.settings.verify_workers
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: self.run_trial(*job), jobs))
        return self.summarize(results)

    @staticmethod
    def summarize(results: list[TrialResult]) -> VerificationSummary:
        properties: dict[str, PropertySummary] = {}
        for trial in results:
            for name, deviation in trial.deviations.items():
                summary = properties.setdefault(name, PropertySummary())
                summary.runs += 1
                summary.failures += name in trial.failures
                lower_is_better = name not in SEPARATION_THRESHOLDS
                if summary.worst_seed is None or (
                    deviation > summary.worst if lower_is_better else deviation < summary.worst
                ):
                    summary.worst = deviation
                    summary.worst_seed = trial.seed
        return VerificationSummary(results, dict(sorted(properties.items())))

    def run_trial(self, index: int, dim: int, seed: int) -> TrialResult:
        rank = 1 + index % dim
        result = TrialResult(index, dim, rank, seed)
        rng = SplitMix64(seed)
        rho = rand_rho(rng, dim, rank)
        hamiltonian = rand_herm(rng, dim)
        estimator = rand_herm(rng, dim)
        u = rand_unitary(rng, dim)

        try:
            self._check_instance(result, rho, hamiltonian, estimator, u)
        except DegenerateInstance as e:
            result.notes.append(f"degenerate instance: {e}")
        except Exception as e:
            logger.error("trial %d (seed %d) raised %s: %s", index, seed, type(e).__name__, e)
            result.failures.append("exception")
            result.notes.append(f"{type(e).__name__}: {e}")

        for name in result.failures:
            if name != "exception":
                logger.error("trial %d (seed %d, dim %d) failed %s: %.3e",
                             index, seed, dim, name, result.deviations.get(name, math.nan))
        return result

    def _record(self, result: TrialResult, name: str, deviation: float) -> None:
        deviation = float(deviation)
        previous = result.deviations.get(name)
        if name in SEPARATION_THRESHOLDS:
            value = deviation if previous is None else min(previous, deviation)
            ok = value > SEPARATION_THRESHOLDS[name]
        else:
            value = deviation if previous is None else max(previous, deviation)
            ok = value <= PROPERTY_TOLERANCES[name]
        if math.isnan(deviation):
            value, ok = math.nan, False
        result.deviations[name] = value
        if not ok and name not in result.failures:
            result.failures.append(name)

    def _table(self, hamiltonian: HermitianOperator, xi: SqrtState, preshift: bool | None = None):
        preshift = self.settings.preshift if preshift is None else preshift
        return build_moment_table(hamiltonian, xi, 2 * self.depth, preshift=preshift,
                                  cap=self.settings.moment_order_cap)

    def _check_instance(self, result: TrialResult, rho, hamiltonian: HermitianOperator,
                        estimator: HermitianOperator, u: np.ndarray) -> None:
        settings = self.settings
        depth = self.depth
        tol = settings.rank_tolerance
        xi = principal_sqrt(rho, settings.clamp_ratio)
        table = self._table(hamiltonian, xi)
        scale = table.scale
        dset = DerivativeSet.build(xi, hamiltonian, 2 * depth, cap=settings.derivative_order_cap)

        for order in range(2, 2 * depth + 1, 2):
            for m in range(0, order // 2 + 1):
                oracle = skew_moment_oracle(dset, order - m, m)
                self._record(result, "moment_equivalence", abs(oracle - table[order]) / scale ** order)
        for a in range(2 * depth + 1):
            for b in range(1 - a % 2, 2 * depth + 1 - a, 2):
                self._record(result, "odd_vanishing", abs(derivative_inner(dset, a, b)) / scale ** (a + b))

        for m in range(depth + 1):
            lhs, rhs = pairing_identity_check(dset, m, cap=settings.derivative_order_cap)
            self._record(result, "pairing_identity", abs(lhs - rhs) / scale ** (2 * m + 1))

        wy = wy_skew_information(hamiltonian, rho, xi)
        self._record(result, "wy_identity", relative_deviation(table[2], 2.0 * wy, floor=scale ** 2))
        self._check_parseval(result, estimator, xi, dset, scale)

        ladder = uncertainty_bound(table, depth, tol)
        values = [table[o] for o in table.orders] + [
            x for r in ladder.rows for x in (r.determinant, r.norm, r.numerator, r.term, r.cumulative)
        ]
        self._record(result, "finite_output", 0.0 if np.all(np.isfinite(values)) else math.inf)
        self._record(result, "first_order", relative_deviation(ladder.rows[0].cumulative, 1.0 / (2.0 * table[2])))
        cumulative = [r.cumulative for r in ladder.rows]
        self._record(result, "ladder_monotonic", max([0.0] + [a - b for a, b in zip(cumulative, cumulative[1:])]))

        frame = build_frame(dset, depth, odd_only=True, tol=settings.frame_tolerance)
        for row in ladder.rows:
            try:
                oracle_norm = frame.norm(row.order)
                oracle_det = frame.odd_determinant(row.order)
            except RankSaturated:
                result.notes.append(f"oracle frame saturates at order {row.order}, Hankel does not")
                continue
            # floors: N_n <= S_2n, D_2n <= prod S_2k (Hadamard), |U_n| ~ n (2 scale)^(n-1)
            n = row.order
            hadamard = math.prod(table[2 * k] for k in range(1, n + 1, 2))
            self._record(result, "norm_crosscheck", relative_deviation(row.norm, oracle_norm, floor=table[2 * n]))
            self._record(result, "determinant_crosscheck",
                         relative_deviation(row.determinant, oracle_det, floor=hadamard))
            oracle_u = numerator_oracle(dset, frame, (n - 1) // 2)
            self._record(result, "numerator_crosscheck",
                         relative_deviation(row.numerator, oracle_u, floor=n * (2.0 * scale) ** (n - 1)))

        if ladder.truncation_order >= 3:
            self._record(result, "third_order", relative_deviation(third_order_bound(table, tol), ladder.rows[1].cumulative))

        if result.dim == 2:
            d6 = hankel_determinant(table, 3) if depth >= 3 else 0.0
            collapsed = ladder.truncation_order == 1 and (ladder.saturation_flag or depth == 1)
            self._record(result, "qubit_collapse", max(d6, 0.0) / scale ** 12 if collapsed else math.inf)

        if rho.is_pure:
            self._check_pure(result, rho, hamiltonian, estimator, xi, table, ladder, scale)

        self._check_invariance(result, hamiltonian, xi, u, table, ladder)

    def _check_parseval(self, result, estimator, xi, dset, scale) -> None:
        frame = complete_frame(build_frame(dset, self.depth, tol=self.settings.frame_tolerance))
        terms = parseval_decomposition(estimator, xi, frame)
        expected = skew_info_second_kind(estimator, xi.density(), xi)
        spread = scale ** 2
        self._record(result, "parseval", relative_deviation(sum(terms), expected, floor=spread))
        self._record(result, "parseval", relative_deviation(sum(terms), 0.5 * grad_norm_sq(estimator, xi), floor=spread))
        self._record(result, "parseval_zero_term", terms[0] / spread)

    def _check_pure(self, result, rho, hamiltonian, estimator, xi, table, ladder, scale) -> None:
        spread = scale ** 2
        self._record(result, "pure_reduction", abs(skew_dispersion(hamiltonian, rho, xi)) / spread)
        t_scale = 1.0 + float(np.linalg.norm(estimator.matrix, 2))
        self._record(result, "pure_reduction", abs(skew_dispersion(estimator, rho, xi)) / t_scale ** 2)
        self._record(result, "pure_reduction",
                     relative_deviation(ladder.rows[0].cumulative, 1.0 / (4.0 * variance(hamiltonian, rho))))
        if result.dim >= 3 and ladder.truncation_order >= 3:
            try:
                comparison = central_moment_bound(hamiltonian, rho, self.settings.rank_tolerance)
            except DegenerateInstance:
                return
            self._record(result, "pure_nonreduction",
                         relative_deviation(third_order_bound(table, self.settings.rank_tolerance), comparison))

    def _check_invariance(self, result, hamiltonian, xi, u, table, ladder) -> None:
        depth = self.depth
        scale = table.scale
        tol = self.settings.rank_tolerance

        def compare(name: str, other, factor: float = 1.0) -> None:
            for order in range(2, 2 * depth + 1, 2):
                expected = factor ** order * table[order]
                self._record(result, name, abs(other[order] - expected) / (factor * scale) ** order)

        c = SHIFT_FRACTION * float(np.linalg.norm(hamiltonian.matrix, 2))
        raw = self._table(hamiltonian, xi, preshift=False)
        compare("shift_invariance", self._table(hamiltonian.shifted(c), xi, preshift=False))
        compare("shift_invariance", raw)

        scaled = self._table(hamiltonian.scaled(SCALE_FACTOR), xi)
        compare("scale_covariance", scaled, SCALE_FACTOR)
        scaled_ladder = uncertainty_bound(scaled, depth, tol)
        for row, other in zip(ladder.rows, scaled_ladder.rows):
            self._record(result, "scale_covariance",
                         relative_deviation(other.cumulative * SCALE_FACTOR ** 2, row.cumulative))

        rotated = self._table(hamiltonian.conjugated(u), SqrtState(u @ xi.matrix @ u.conj().T))
        compare("unitary_covariance", rotated)

        compare("time_invariance", self._table(hamiltonian, evolve(xi, hamiltonian, TIME_STEP)))
