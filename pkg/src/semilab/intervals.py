"""Outward-rounded arbitrary-precision intervals and certified comparisons.

Thin layer over mpmath's interval context.  Exact rationals embed as the
tightest representable interval around them; every arithmetic result is an
interval guaranteed to contain the true real value, so a comparison between
two interval endpoints is a proof, not an estimate.
"""

from __future__ import annotations

import contextlib
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import mpmath
from mpmath.libmp import to_rational

iv = mpmath.iv

DEFAULT_PRECISION = 128
MAX_PRECISION = 1024

_prec_lock = threading.RLock()

RationalLike = Union[Fraction, int]


@contextlib.contextmanager
def precision(bits: int):
    """Temporarily set the working interval precision."""
    with _prec_lock:
        old = iv.prec
        iv.prec = bits
        try:
            yield
        finally:
            iv.prec = old


def from_fraction(q: RationalLike):
    """Embed an exact rational as an enclosing interval."""
    q = Fraction(q)
    if q.denominator == 1:
        return iv.mpf(q.numerator)
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


def endpoints(x) -> tuple[Fraction, Fraction]:
    """Exact rational values of an interval's endpoints."""
    lo_raw, hi_raw = x._mpi_
    return _mpf_to_fraction(lo_raw), _mpf_to_fraction(hi_raw)


def _mpf_to_fraction(raw) -> Fraction:
    p, q = to_rational(raw)
    return Fraction(int(p), int(q))


def abs_interval(x):
    """Interval absolute value."""
    if x.a >= 0:
        return x
    if x.b <= 0:
        return -x
    return iv.mpf([0, max(-x.a, x.b).b])


def pow_nonneg(x, e: Fraction):
    """x**e for a nonnegative interval x and positive rational exponent e."""
    e = Fraction(e)
    if e <= 0:
        raise ValueError("exponent must be positive")
    if x.b <= 0:
        return iv.mpf(0)
    hi = iv.exp(from_fraction(e) * iv.log(iv.mpf([x.b, x.b])))
    if x.a <= 0:
        return iv.mpf([0, hi.b])
    lo = iv.exp(from_fraction(e) * iv.log(iv.mpf([x.a, x.a])))
    return iv.mpf([lo.a, hi.b])


def interval_str(x, digits: int = 30) -> tuple[str, str]:
    lo, hi = x._mpi_
    return (
        mpmath.libmp.to_str(lo, digits),
        mpmath.libmp.to_str(hi, digits),
    )


CERTIFIED_HOLDS = "certified-holds"
CERTIFIED_FAILS = "certified-fails"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a certified comparison lhs <= rhs."""

    outcome: str
    lhs_lo: str
    lhs_hi: str
    rhs_lo: str
    rhs_hi: str
    precision_bits: int

    @property
    def holds(self) -> bool:
        return self.outcome == CERTIFIED_HOLDS

    @property
    def fails(self) -> bool:
        return self.outcome == CERTIFIED_FAILS

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "lhs": [self.lhs_lo, self.lhs_hi],
            "rhs": [self.rhs_lo, self.rhs_hi],
            "precision": self.precision_bits,
        }


def compare_le(lhs, rhs, precision_bits: int) -> Verdict:
    """Certify lhs <= rhs from two intervals already computed."""
    if lhs.b <= rhs.a:
        outcome = CERTIFIED_HOLDS
    elif lhs.a > rhs.b:
        outcome = CERTIFIED_FAILS
    else:
        outcome = INCONCLUSIVE
    llo, lhi = interval_str(lhs)
    rlo, rhi = interval_str(rhs)
    return Verdict(outcome, llo, lhi, rlo, rhi, precision_bits)


def certify_le(
    make_sides: Callable[[], tuple[object, object]],
    start_bits: int = DEFAULT_PRECISION,
    max_bits: int = MAX_PRECISION,
) -> Verdict:
    """Certify lhs <= rhs, doubling precision while inconclusive.

    ``make_sides`` recomputes both intervals under the active precision.
    An inconclusive verdict at ``max_bits`` is reported, never coerced.
    """
    bits = start_bits
    while True:
        with precision(bits):
            lhs, rhs = make_sides()
            verdict = compare_le(lhs, rhs, bits)
        if verdict.outcome != INCONCLUSIVE or bits >= max_bits:
            return verdict
        bits = min(bits * 2, max_bits)
