"""Certified interval brackets for exp and log, and the comparison ladder."""

import math
from fractions import Fraction

import pytest

from densitas.bounds import decide_less, exp_bounds, log_bounds
from densitas.exceptions import DensitasError


def test_exp_bounds_bracket_e():
    lo, hi = exp_bounds(1)
    assert isinstance(lo, Fraction) and isinstance(hi, Fraction)
    assert lo < hi
    assert float(lo) <= math.e <= float(hi)
    assert hi - lo < Fraction(1, 10 ** 30)


def test_exp_bounds_accept_rational_exponent():
    lo, hi = exp_bounds(Fraction(1, 2))
    assert float(lo) <= math.sqrt(math.e) <= float(hi)


def test_log_bounds_bracket_log_75():
    lo, hi = log_bounds(75)
    assert float(lo) <= math.log(75) <= float(hi)
    assert hi - lo < Fraction(1, 10 ** 30)


def test_log_bounds_reject_nonpositive():
    with pytest.raises(ValueError):
        log_bounds(0)
    with pytest.raises(ValueError):
        log_bounds(Fraction(-3, 2))


def test_width_shrinks_with_precision():
    lo1, hi1 = exp_bounds(10, bits=128)
    lo2, hi2 = exp_bounds(10, bits=256)
    assert hi2 - lo2 < hi1 - lo1
    assert lo1 <= lo2 < hi2 <= hi1


def test_decide_less_both_directions():
    e_squared = lambda bits: exp_bounds(2, bits)
    assert decide_less(e_squared, Fraction(8)) is True
    assert decide_less(e_squared, Fraction(7)) is False


def test_decide_less_near_miss_is_resolved():
    # log^2(n)/n against 1/4: n = 74 sits within 2e-4 of the threshold and
    # still gets a certified verdict, n = 75 crosses it.
    def ratio(n):
        def make(bits):
            lo, hi = log_bounds(n, bits)
            return lo * lo / n, hi * hi / n
        return make

    assert decide_less(ratio(74), Fraction(1, 4)) is False
    assert decide_less(ratio(75), Fraction(1, 4)) is True


def test_decide_less_gives_up_on_frozen_interval():
    def stuck(bits):
        return Fraction(0), Fraction(2)

    with pytest.raises(DensitasError):
        decide_less(stuck, Fraction(1))
