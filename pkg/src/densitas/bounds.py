"""Certified rational bounds on transcendental quantities.

Parameter validation compares factorials and naturals against e^2, e^{2(n+1)}
and log^2(N). Floating point cannot certify such comparisons, so these
helpers run mpmath's interval arithmetic with outward rounding and convert
the interval endpoints to exact rationals. A comparison is decided only when
the whole interval sits on one side of the threshold; otherwise the
precision ladder escalates, and an undecidable comparison at the top
precision raises instead of guessing.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from mpmath import iv
from mpmath.libmp import to_rational

from .exceptions import DensitasError

__all__ = ["exp_bounds", "log_bounds", "decide_less"]

_LADDER = (128, 256, 512, 1024)


def _endpoints(x) -> tuple[Fraction, Fraction]:
    lo, hi = x._mpi_
    pl, ql = to_rational(lo)
    ph, qh = to_rational(hi)
    return Fraction(int(pl), int(ql)), Fraction(int(ph), int(qh))


def exp_bounds(x, bits: int = 128) -> tuple[Fraction, Fraction]:
    """Rational lo <= e^x <= hi with outward rounding at the given precision."""
    x = Fraction(x)
    old = iv.prec
    iv.prec = bits
    try:
        v = iv.exp(iv.mpf(x.numerator) / x.denominator)
        return _endpoints(v)
    finally:
        iv.prec = old


def log_bounds(x, bits: int = 128) -> tuple[Fraction, Fraction]:
    """Rational lo <= ln(x) <= hi for positive rational x."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("logarithm needs a positive argument")
    old = iv.prec
    iv.prec = bits
    try:
        v = iv.log(iv.mpf(x.numerator) / x.denominator)
        return _endpoints(v)
    finally:
        iv.prec = old


def decide_less(make_interval: Callable[[int], tuple[Fraction, Fraction]],
                threshold: Fraction) -> bool:
    """Whether the bracketed quantity is certainly below the threshold.

    `make_interval(bits)` returns certified rational bounds at the requested
    precision. Returns True when the upper bound clears the threshold, False
    when the lower bound does not, and escalates precision while the
    interval straddles it.
    """
    threshold = Fraction(threshold)
    for bits in _LADDER:
        lo, hi = make_interval(bits)
        if hi < threshold:
            return True
        if lo >= threshold:
            return False
    raise DensitasError(
        f"interval comparison against {threshold} undecided at {_LADDER[-1]} bits")
