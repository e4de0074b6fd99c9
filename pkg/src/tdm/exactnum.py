"""Exact rationals and the quadratic field Q(sqrt 2).

Rationals are :class:`fractions.Fraction` (re-exported as ``BigRational``);
Python integers are already arbitrary precision.  :class:`QuadNum` is an
immutable element ``rat + surd*sqrt(2)`` with rational components.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

BigRational = Fraction

__all__ = [
    "BigRational",
    "QuadNum",
    "as_quad",
    "quad_mul",
    "quad_inv",
    "quad_rational_part",
    "is_rational",
    "SQRT2",
]


def _rat(x) -> Fraction | int:
    # ints stay ints: they are much cheaper than Fractions in the hot paths
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return _rat(Fraction(x.numerator, x.denominator))
    raise TypeError(f"not an exact rational: {x!r}")


class QuadNum:
    """Element ``rat + surd*sqrt(2)`` of Q(sqrt 2).

    >>> QuadNum(3, -2) * QuadNum(3, 2)
    QuadNum(1)
    """

    __slots__ = ("rat", "surd")

    def __init__(self, rat=0, surd=0):
        object.__setattr__(self, "rat", _rat(rat))
        object.__setattr__(self, "surd", _rat(surd))

    def __setattr__(self, name, value):
        raise AttributeError("QuadNum is immutable")

    @classmethod
    def from_sqrt(cls, n: int, coeff=1) -> "QuadNum":
        """``coeff*sqrt(n)`` for ``n`` in {0, 1, 2, 4, 8, 18, ...} (``n = k**2`` or ``2*k**2``)."""
        if n < 0:
            raise ValueError("negative radicand")
        k = math.isqrt(n)
        if k * k == n:
            return cls(coeff * k, 0)
        k = math.isqrt(n // 2)
        if n % 2 == 0 and 2 * k * k == n:
            return cls(0, coeff * k)
        raise ValueError(f"sqrt({n}) is not in Q(sqrt 2)")

    # -- predicates -----------------------------------------------------
    def is_rational(self) -> bool:
        return self.surd == 0

    def is_zero(self) -> bool:
        return self.rat == 0 and self.surd == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    # -- arithmetic -----------------------------------------------------
    def conjugate(self) -> "QuadNum":
        return QuadNum(self.rat, -self.surd)

    def norm(self):
        """Field norm ``rat**2 - 2*surd**2`` (a rational)."""
        return self.rat * self.rat - 2 * self.surd * self.surd

    def __add__(self, other):
        if isinstance(other, QuadNum):
            return QuadNum(self.rat + other.rat, self.surd + other.surd)
        if isinstance(other, Rational):
            return QuadNum(self.rat + other, self.surd)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return QuadNum(-self.rat, -self.surd)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, QuadNum):
            return QuadNum(self.rat - other.rat, self.surd - other.surd)
        if isinstance(other, Rational):
            return QuadNum(self.rat - other, self.surd)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Rational):
            return QuadNum(other - self.rat, -self.surd)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, QuadNum):
            p, q = self.rat, self.surd
            r, s = other.rat, other.surd
            if q == 0:
                return QuadNum(p * r, p * s)
            if s == 0:
                return QuadNum(p * r, q * r)
            return QuadNum(p * r + 2 * q * s, p * s + q * r)
        if isinstance(other, Rational):
            return QuadNum(self.rat * other, self.surd * other)
        return NotImplemented

    __rmul__ = __mul__

    def inverse(self) -> "QuadNum":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadNum inverse of zero")
        return QuadNum(Fraction(self.rat) / n, Fraction(-self.surd) / n)

    def __truediv__(self, other):
        if isinstance(other, QuadNum):
            return self * other.inverse()
        if isinstance(other, Rational):
            if other == 0:
                raise ZeroDivisionError("QuadNum division by zero")
            return QuadNum(Fraction(self.rat) / other, Fraction(self.surd) / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Rational):
            return self.inverse() * other
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = QuadNum(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison / hashing --------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QuadNum):
            return self.rat == other.rat and self.surd == other.surd
        if isinstance(other, Rational):
            return self.surd == 0 and self.rat == other
        return NotImplemented

    def __hash__(self):
        if self.surd == 0:
            return hash(self.rat)
        return hash((self.rat, self.surd))

    def __float__(self):
        if self.rat * self.surd < 0:
            # opposite signs cancel; divide the exact norm by the conjugate instead
            return float(Fraction(self.norm())) / (float(self.rat) - float(self.surd) * math.sqrt(2.0))
        return float(self.rat) + float(self.surd) * math.sqrt(2.0)

    def __repr__(self):
        if self.surd == 0:
            return f"QuadNum({self.rat})"
        return f"QuadNum({self.rat}, {self.surd})"

    def __str__(self):
        if self.surd == 0:
            return str(self.rat)
        if self.rat == 0:
            return f"{self.surd}*sqrt2"
        sign = "+" if self.surd > 0 else "-"
        return f"{self.rat}{sign}{abs(self.surd)}*sqrt2"


SQRT2 = QuadNum(0, 1)


def as_quad(x) -> QuadNum:
    if isinstance(x, QuadNum):
        return x
    return QuadNum(x, 0)


def quad_mul(x, y) -> QuadNum:
    return as_quad(x) * as_quad(y)


def quad_inv(x) -> QuadNum:
    return as_quad(x).inverse()


def quad_rational_part(x) -> Fraction | int:
    return as_quad(x).rat


def is_rational(x) -> bool:
    return as_quad(x).is_rational()
