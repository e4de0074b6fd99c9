"""Closed-form cumulants for v = 1, 2, 3, computed without the recursion."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb

from ..seriesx import legendre_value

__all__ = ["schroder", "P_coeff", "Q_coeff", "closed_alpha2", "triple_legendre", "closed_alpha3"]


@lru_cache(maxsize=None)
def _schroder_table(n: int) -> tuple[int, ...]:
    vals = [0, 1, 2]
    for k in range(2, n):
        nxt = Fraction(3 * (2 * k - 1) * vals[k] - (k - 2) * vals[k - 1], k + 1)
        if nxt.denominator != 1:
            raise ArithmeticError("Schroder recurrence left the integers")
        vals.append(int(nxt))
    return tuple(vals[: n + 1])


def schroder(kappa: int) -> int:
    """Large Schroeder number ``S_kappa`` (1, 2, 6, 22, 90, ...).

    Uses ``(k+1) S_{k+1} = 3(2k-1) S_k - (k-2) S_{k-1}`` with ``S_1 = 1, S_2 = 2``.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    return _schroder_table(max(kappa, 2))[kappa]


def P_coeff(kappa: int) -> int:
    """``P(k) = sum_p C(k-1, p) C(k+p, p)``."""
    return sum(comb(kappa - 1, p) * comb(kappa + p, p) for p in range(kappa))


def Q_coeff(kappa: int) -> int:
    """``Q(k) = sum_q C(k, q+1) C(k+q, q)``."""
    return sum(comb(kappa, q + 1) * comb(kappa + q, q) for q in range(kappa))


def closed_alpha2(k1: int, k2: int) -> int:
    """``4 k1 k2 / (k1 + k2) * [P(k1) Q(k2) + Q(k1) P(k2)]``, asserted integral."""
    if k1 < 1 or k2 < 1:
        raise ValueError("kappa_i must be >= 1")
    val = Fraction(4 * k1 * k2, k1 + k2) * (P_coeff(k1) * Q_coeff(k2) + Q_coeff(k1) * P_coeff(k2))
    if val.denominator != 1:
        raise ArithmeticError(f"closed form for alpha[{k1},{k2}] is not an integer: {val}")
    return val.numerator


@lru_cache(maxsize=None)
def triple_legendre(k: int) -> int:
    """``a_k = sum_{l1+l2+l3=k} P_l1(3) P_l2(3) P_l3(3)``; ``a_{-1} = 0``."""
    if k < 0:
        return 0
    return sum(
        legendre_value(l1) * legendre_value(l2) * legendre_value(k - l1 - l2)
        for l1 in range(k + 1)
        for l2 in range(k - l1 + 1)
    )


def closed_alpha3(k1: int, k2: int, k3: int) -> int:
    """``16 b_{k1-1, k2-1, k3-1}`` from the triple Legendre convolutions."""
    if min(k1, k2, k3) < 1:
        raise ValueError("kappa_i must be >= 1")
    a = triple_legendre
    i, j, k = k1 - 1, k2 - 1, k3 - 1
    b = (
        6 * a(i) * a(j) * a(k)
        + a(i - 1) * a(j - 1) * a(k - 1)
        - (a(i - 1) * a(j) * a(k) + a(i) * a(j - 1) * a(k) + a(i) * a(j) * a(k - 1))
    )
    return 16 * b
