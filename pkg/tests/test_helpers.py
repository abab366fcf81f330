import math

import numpy as np
import pytest

from utils.helpers import (
    binomial,
    centered_spectral_norm,
    format_float,
    parse_int_list,
    relative_deviation,
    sanitize_label,
    tolerance_scale,
)


@pytest.mark.parametrize("n, k", [(0, 0), (5, 2), (16, 8), (13, 6)])
def test_binomial_is_exact(n, k):
    assert binomial(n, k) == math.comb(n, k)
    assert isinstance(binomial(n, k), int)


def test_binomial_outside_range_is_zero():
    assert binomial(4, -1) == 0
    assert binomial(4, 5) == 0


def test_centered_norm_ignores_shifts():
    a = np.diag([1.0, 3.0, 4.0])
    assert centered_spectral_norm(a + 7.0 * np.eye(3)) == pytest.approx(centered_spectral_norm(a))
    assert tolerance_scale(a, 2) == pytest.approx((1.0 + centered_spectral_norm(a)) ** 2)


def test_relative_deviation():
    assert relative_deviation(0.0, 0.0) == 0.0
    assert relative_deviation(1.0, 1.1) == pytest.approx(0.1 / 1.1)
    assert relative_deviation(1e-20, 2e-20, floor=1.0) == pytest.approx(1e-20)


def test_parse_int_list():
    assert parse_int_list("3, 4,5") == [3, 4, 5]
    with pytest.raises(ValueError):
        parse_int_list(" , ")
    with pytest.raises(ValueError):
        parse_int_list("3,x")


def test_sanitize_label_and_format():
    assert sanitize_label(' my "qubit", run/1 ') == "my_qubit_run1"
    assert format_float(1.0 / 3.0, 4) == "0.3333"
