"""Closed intervals with exact rational endpoints.

Every real quantity that feeds a certified comparison lives in one of these.
Endpoints are :class:`fractions.Fraction`, so the arithmetic never rounds and
an enclosure is only ever widened by the interval rules themselves.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import mpmath


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class Interval:
    """The closed interval ``[lo, hi]`` of the real line."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = _q(lo)
        hi = lo if hi is None else _q(hi)
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def ball(cls, center, radius) -> "Interval":
        center, radius = _q(center), _q(radius)
        return cls(center - radius, center + radius)

    @classmethod
    def coerce(cls, x) -> "Interval":
        return x if isinstance(x, Interval) else cls(x)

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def rad(self) -> Fraction:
        return (self.hi - self.lo) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= _q(x) <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def sign(self):
        """+1 or -1 when the sign is certified, 0 for the point 0, else None."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None

    def __add__(self, other):
        other = Interval.coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-Interval.coerce(other))

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        if self.lo >= 0 and other.lo >= 0:
            return Interval(self.lo * other.lo, self.hi * other.hi)
        p = (self.lo * other.lo, self.lo * other.hi,
             self.hi * other.lo, self.hi * other.hi)
        return Interval(min(p), max(p))

    __rmul__ = __mul__

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0, max(-self.lo, self.hi))

    def square(self) -> "Interval":
        a = abs(self)
        return Interval(a.lo * a.lo, a.hi * a.hi)

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("divisor interval contains 0")
        return self * Interval(1 / other.hi, 1 / other.lo)

    def __lt__(self, other):
        """Certified strict comparison: True / False, never a guess."""
        other = Interval.coerce(other)
        if self.hi < other.lo:
            return True
        if self.lo >= other.hi:
            return False
        raise ValueError("comparison undecided at current precision")

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __float__(self):
        return float(self.mid)

    def to_mpf(self, prec: int = 53):
        with mpmath.workprec(prec):
            return mpmath.mpf(self.mid.numerator) / self.mid.denominator

    def __repr__(self):
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r}, rad={float(self.rad):.3g})"


def max_interval(items) -> Interval:
    items = list(items)
    return Interval(max(x.lo for x in items), max(x.hi for x in items))


def interval_det(rows) -> Interval:
    """Determinant by permutation expansion; fine for the d <= 6 this package uses."""
    from itertools import permutations

    n = len(rows)
    total = Interval(0)
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = Interval(1)
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        total = total - term if inv % 2 else total + term
    return total
