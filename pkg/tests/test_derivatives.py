import numpy as np
import numpy.testing as npt
import pytest

from processors.derivatives import (
    DerivativeSet,
    derivative_inner,
    finite_difference_check,
    state_derivative,
)
from processors.exceptions import OrderTooLarge, ValidationError
from processors.linalg import DensityMatrix, HermitianOperator, evolve, principal_sqrt

from conftest import SIGMA_X, SIGMA_Y, SIGMA_Z


@pytest.fixture
def qubit_pair(pauli):
    return principal_sqrt(DensityMatrix(np.diag([0.64, 0.36]))), pauli["x"]


def test_order_zero_is_xi(make_instance):
    instance = make_instance(3, seed=2)
    xi = principal_sqrt(instance.state)
    npt.assert_allclose(state_derivative(xi, instance.hamiltonian, 0).matrix, xi.matrix, atol=1e-15)


def test_commuting_derivatives_vanish():
    xi = principal_sqrt(DensityMatrix(np.diag([0.7, 0.3])))
    dset = DerivativeSet.build(xi, HermitianOperator(SIGMA_Z), 6)
    for n in range(1, 7):
        npt.assert_allclose(dset[n].matrix, 0.0, atol=1e-14)


def test_first_derivative_of_qubit(qubit_pair):
    # -i [sigma_x, diag(.8, .6)] = -0.2 sigma_y
    xi, h = qubit_pair
    npt.assert_allclose(state_derivative(xi, h, 1).matrix, -0.2 * SIGMA_Y, atol=1e-14)


def test_second_derivative_formula(make_instance):
    instance = make_instance(4, seed=8)
    xi = principal_sqrt(instance.state)
    h = instance.hamiltonian.matrix
    x = xi.matrix
    expected = -(h @ h @ x - 2 * h @ x @ h + x @ h @ h)
    npt.assert_allclose(state_derivative(xi, instance.hamiltonian, 2).matrix, expected, atol=1e-12)


def test_derivatives_are_hermitian(make_instance):
    instance = make_instance(5, seed=21)
    dset = DerivativeSet.build(principal_sqrt(instance.state), instance.hamiltonian, 8)
    for n in range(9):
        a = dset[n].matrix
        npt.assert_array_equal(a, a.conj().T)


def test_odd_order_sums_vanish(make_instance):
    instance = make_instance(4, seed=42)
    dset = DerivativeSet.build(principal_sqrt(instance.state), instance.hamiltonian, 7)
    for m in range(8):
        for n in range(1 - m % 2, 8, 2):
            assert abs(derivative_inner(dset, m, n)) <= dset.tolerance(m + n)


def test_pairing_depends_only_on_order_sum(make_instance):
    instance = make_instance(3, seed=13)
    dset = DerivativeSet.build(principal_sqrt(instance.state), instance.hamiltonian, 6)
    # each step of the integration by parts flips the sign
    a = derivative_inner(dset, 3, 1)
    assert a == pytest.approx(-derivative_inner(dset, 2, 2), rel=1e-10)
    assert a == pytest.approx(-derivative_inner(dset, 4, 0), rel=1e-10)


def test_time_shift_consistency(make_instance):
    instance = make_instance(3, seed=4)
    h = instance.hamiltonian
    xi = principal_sqrt(instance.state)
    t = 0.45
    u = np.linalg.eigh(h.matrix)
    phases = (u[1] * np.exp(-1j * u[0] * t)) @ u[1].conj().T
    for n in range(4):
        moved = state_derivative(evolve(xi, h, t), h, n).matrix
        expected = phases @ state_derivative(xi, h, n).matrix @ phases.conj().T
        npt.assert_allclose(moved, expected, atol=1e-11)


def test_order_cap():
    xi = principal_sqrt(DensityMatrix(np.eye(2) / 2))
    with pytest.raises(OrderTooLarge):
        state_derivative(xi, HermitianOperator(SIGMA_X), 17)
    with pytest.raises(ValidationError):
        state_derivative(xi, HermitianOperator(SIGMA_X), -1)
    dset = DerivativeSet.build(xi, HermitianOperator(SIGMA_X), 3)
    with pytest.raises(OrderTooLarge):
        dset[4]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_finite_difference_agrees(make_instance, n):
    instance = make_instance(3, seed=17)
    xi = principal_sqrt(instance.state)
    assert finite_difference_check(xi, instance.hamiltonian, n, 1e-2) < 1e-2 * (1 + np.linalg.norm(instance.hamiltonian.matrix, 2)) ** (n + 2)


def test_finite_difference_is_second_order(make_instance):
    instance = make_instance(3, seed=17)
    xi = principal_sqrt(instance.state)
    coarse = finite_difference_check(xi, instance.hamiltonian, 2, 2e-3)
    fine = finite_difference_check(xi, instance.hamiltonian, 2, 1e-3)
    assert 3.5 < coarse / fine < 4.5


def test_finite_difference_commuting_case():
    xi = principal_sqrt(DensityMatrix(np.diag([0.7, 0.3])))
    assert finite_difference_check(xi, HermitianOperator(SIGMA_Z), 1, 1e-2) < 1e-12


@pytest.mark.parametrize("n, h", [(0, 1e-2), (5, 1e-2), (2, 1e-5), (2, 0.5)])
def test_finite_difference_ranges(qubit_pair, n, h):
    xi, ham = qubit_pair
    with pytest.raises(ValidationError):
        finite_difference_check(xi, ham, n, h)
