import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from processors.bound_ladder import (
    arc_length,
    central_moment_bound,
    estimation_angle,
    frame_norm,
    hankel_determinant,
    is_saturated,
    numerator,
    pairing_identity_check,
    projection_coefficient,
    third_order_bound,
    uncertainty_bound,
)
from processors.derivatives import DerivativeSet
from processors.exceptions import (
    DegenerateSurface,
    InvalidGeometry,
    MissingMoment,
    RankSaturated,
    ValidationError,
    ZeroFisherInformation,
)
from processors.linalg import DensityMatrix, HermitianOperator, principal_sqrt, variance
from processors.skew_moments import build_moment_table
from utils.random_instances import SplitMix64, rand_herm, rand_unitary, random_instance

from conftest import SIGMA_X, SIGMA_Y, SIGMA_Z


def table_for(instance, max_order=10, **kwargs):
    return build_moment_table(instance.hamiltonian, principal_sqrt(instance.state), max_order, **kwargs)


@pytest.fixture
def generic(make_instance):
    return table_for(make_instance(4, seed=42))


@pytest.fixture
def qubit(make_instance):
    return table_for(make_instance(2, seed=1))


def test_low_order_determinants(generic):
    s = generic
    assert hankel_determinant(s, -1) == 1.0
    assert hankel_determinant(s, 1) == s[2]
    assert hankel_determinant(s, 3) == pytest.approx(s[6] * s[2] - s[4] ** 2, rel=1e-10)
    expected = np.linalg.det(np.array([[s[10], s[8], s[6]], [s[8], s[6], s[4]], [s[6], s[4], s[2]]]))
    assert hankel_determinant(s, 5) == pytest.approx(expected, rel=1e-8)


def test_determinant_needs_moments(generic):
    short = build_moment_table(generic.hamiltonian, generic.xi, 4)
    with pytest.raises(MissingMoment):
        hankel_determinant(short, 3)
    with pytest.raises(ValidationError):
        hankel_determinant(generic, 2)


def test_qubit_frame_saturates_at_three(qubit):
    assert abs(hankel_determinant(qubit, 3)) <= 1e-10 * qubit[6] * qubit[2]
    assert is_saturated(qubit, 3)
    with pytest.raises(RankSaturated) as info:
        frame_norm(qubit, 3)
    assert info.value.order == 3


def test_frame_norms(generic):
    s = generic
    assert frame_norm(s, 1) == s[2]
    assert frame_norm(s, 3) == pytest.approx(s[6] - s[4] ** 2 / s[2], rel=1e-10)
    assert 0.0 < frame_norm(s, 5) <= s[10]


def test_projection_coefficients(generic):
    s = generic
    assert projection_coefficient(s, 3, 1) == pytest.approx(-s[4] / s[2], rel=1e-12)
    assert projection_coefficient(s, 5, 1) == pytest.approx(s[6] / s[2], rel=1e-12)
    d6 = s[6] * s[2] - s[4] ** 2
    assert projection_coefficient(s, 5, 3) == pytest.approx(-(s[8] * s[2] - s[6] * s[4]) / d6, rel=1e-8)
    with pytest.raises(ValidationError):
        projection_coefficient(s, 3, 3)


def test_numerators(generic):
    s = generic
    assert numerator(s, 1) == 1.0
    assert numerator(s, 3) == pytest.approx((s[4] - 3.0 * s[2] ** 2) / s[2], rel=1e-10)


def test_third_order_rung_matches_closed_form(generic):
    ladder = uncertainty_bound(generic, 3)
    assert [r.order for r in ladder.rows] == [1, 3]
    assert ladder.bound == pytest.approx(third_order_bound(generic), rel=1e-10)
    assert not ladder.saturation_flag


def test_ladder_is_monotone(generic):
    ladder = uncertainty_bound(generic, 5)
    assert ladder.truncation_order == 5
    assert ladder.rows[0].cumulative == pytest.approx(1.0 / (2.0 * generic[2]))
    assert all(r.term >= 0.0 for r in ladder.rows)
    cumulative = [r.cumulative for r in ladder.rows]
    assert cumulative == sorted(cumulative)
    assert list(ladder.as_frame().columns) == ["n", "D", "N", "U", "term", "cumulative"]


def test_qubit_ladder_truncates(qubit):
    ladder = uncertainty_bound(qubit, 5)
    assert ladder.truncation_order == 1
    assert ladder.saturation_flag
    assert ladder.requested_order == 5
    assert ladder.bound == pytest.approx(1.0 / (2.0 * qubit[2]))
    with pytest.raises(RankSaturated):
        third_order_bound(qubit)


def test_commuting_instance_has_no_bound():
    table = build_moment_table(HermitianOperator(SIGMA_Z), principal_sqrt(DensityMatrix(np.diag([0.7, 0.3]))), 6)
    with pytest.raises(ZeroFisherInformation):
        uncertainty_bound(table, 3)
    with pytest.raises(ZeroFisherInformation):
        third_order_bound(table)


def test_order_validation(generic):
    with pytest.raises(ValidationError):
        uncertainty_bound(generic, 4)
    with pytest.raises(MissingMoment):
        uncertainty_bound(build_moment_table(generic.hamiltonian, generic.xi, 4), 3)


def test_first_rung_for_pure_states(make_instance):
    instance = make_instance(3, rank=1, seed=12)
    ladder = uncertainty_bound(table_for(instance, 6), 1)
    expected = 1.0 / (4.0 * variance(instance.hamiltonian, instance.state))
    assert ladder.bound == pytest.approx(expected, rel=1e-10)


@settings(deadline=None, max_examples=15)
@given(seed=st.integers(min_value=0, max_value=2 ** 40), dim=st.integers(3, 5),
       factor=st.floats(min_value=0.2, max_value=5.0))
def test_bound_scales_inversely_with_h_squared(seed, dim, factor):
    instance = random_instance(dim, dim, seed)
    xi = principal_sqrt(instance.state)
    base = uncertainty_bound(build_moment_table(instance.hamiltonian, xi, 6), 3)
    scaled = uncertainty_bound(build_moment_table(instance.hamiltonian.scaled(factor), xi, 6), 3)
    assert scaled.truncation_order == base.truncation_order
    assert scaled.bound * factor ** 2 == pytest.approx(base.bound, rel=1e-8)


def test_pure_third_order_differs_from_central_moment_bound(make_instance):
    instance = make_instance(3, rank=1, seed=23)
    table = table_for(instance, 6)
    skew = third_order_bound(table)
    comparison = central_moment_bound(instance.hamiltonian, instance.state)
    assert abs(skew - comparison) / max(skew, comparison) > 1e-6


def test_near_pure_qubit_stays_finite():
    rng = SplitMix64(99)
    u = rand_unitary(rng, 2)
    rho = DensityMatrix(u @ np.diag([1.0 - 1e-8, 1e-8]) @ u.conj().T)
    table = build_moment_table(rand_herm(rng, 2), principal_sqrt(rho), 10)
    ladder = uncertainty_bound(table, 5)
    assert ladder.truncation_order == 1
    assert all(math.isfinite(x) for r in ladder.rows for x in (r.norm, r.numerator, r.cumulative))


@pytest.mark.parametrize("m", range(6))
def test_pairing_identity(make_instance, m):
    instance = make_instance(4, seed=7 + m)
    dset = DerivativeSet.build(principal_sqrt(instance.state), instance.hamiltonian, 2 * m + 1)
    lhs, rhs = pairing_identity_check(dset, m)
    assert abs(lhs - rhs) <= 1e-9 * dset.scale ** (2 * m + 1)
    if m == 0:
        assert rhs == pytest.approx(1.0)


def test_arc_length(make_instance):
    instance = make_instance(3, rank=1, seed=5)
    table = table_for(instance, 2)
    assert arc_length(table, 0.0) == 0.0
    spread = math.sqrt(variance(instance.hamiltonian, instance.state))
    assert arc_length(table, 0.5) == pytest.approx(2.0 * spread * 0.5, rel=1e-10)
    assert arc_length(table, 1.0) == pytest.approx(2.0 * arc_length(table, 0.5))
    with pytest.raises(ValidationError):
        arc_length(table, -0.1)


def test_angle_for_commuting_estimator():
    rho = DensityMatrix(np.diag([0.7, 0.3]))
    report = estimation_angle(HermitianOperator(SIGMA_Z), rho, HermitianOperator(SIGMA_X))
    assert report.t == pytest.approx(0.4)
    assert report.pairing == pytest.approx(0.0, abs=1e-14)
    assert report.angle == pytest.approx(math.pi / 2)
    assert report.direct_angle == pytest.approx(math.pi / 2)
    assert report.residual < 1e-8
    assert report.invalid_geometry
    assert report.premise_cosine > 1.0
    with pytest.raises(InvalidGeometry):
        estimation_angle(HermitianOperator(SIGMA_Z), rho, HermitianOperator(SIGMA_X), strict=True)


def test_angle_for_minimum_uncertainty_estimator():
    report = estimation_angle(HermitianOperator(SIGMA_Y), DensityMatrix(np.diag([1.0, 0.0])), HermitianOperator(SIGMA_X))
    assert report.angle == pytest.approx(0.0, abs=1e-6)
    assert report.direct_angle == pytest.approx(0.0, abs=1e-6)
    assert report.premise_cosine == pytest.approx(0.5)
    assert not report.invalid_geometry
    assert report.arc_length == 0.0


@pytest.mark.parametrize("t", [0.3, 0.0, -1.0, 2.5])
def test_angle_cross_check(make_instance, t):
    instance = make_instance(4, seed=77, estimator=True)
    report = estimation_angle(instance.estimator, instance.state, instance.hamiltonian, t=t)
    assert report.t == t
    assert report.residual <= 1e-8
    assert 0.0 <= report.angle <= math.pi / 2
    assert np.sum(np.abs(report.normal.matrix) ** 2) == pytest.approx(1.0)
    assert np.sum(np.abs(report.tangent.matrix) ** 2) == pytest.approx(1.0)


@pytest.mark.parametrize("t", [None, 0.0, 0.5, -1.0])
def test_angle_follows_supplied_level(t):
    instance = random_instance(3, 3, 9, estimator=True)
    report = estimation_angle(instance.estimator, instance.state, instance.hamiltonian, t=t)
    assert report.residual <= 1e-8
    baseline = estimation_angle(instance.estimator, instance.state, instance.hamiltonian)
    if t is not None and abs(t - baseline.t) > 1e-3:
        assert report.angle != pytest.approx(baseline.angle, abs=1e-6)
        assert report.premise_cosine < baseline.premise_cosine


def test_angle_arc_length_policy(make_instance):
    instance = make_instance(4, seed=77, estimator=True)
    table = table_for(instance, 2)
    report = estimation_angle(instance.estimator, instance.state, instance.hamiltonian, t=0.3)
    assert report.arc_length == pytest.approx(arc_length(table, 0.3), rel=1e-12)
    negative = estimation_angle(instance.estimator, instance.state, instance.hamiltonian, t=-0.3)
    assert negative.arc_length is None


def test_degenerate_surfaces():
    rho = DensityMatrix(np.diag([0.7, 0.3]))
    with pytest.raises(DegenerateSurface):
        estimation_angle(HermitianOperator(np.eye(2)), rho, HermitianOperator(SIGMA_X))
    with pytest.raises(DegenerateSurface):
        estimation_angle(HermitianOperator(SIGMA_X), rho, HermitianOperator(SIGMA_Z))
