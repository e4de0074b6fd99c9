"""Exact check of the parameter-derivative identities at the model point.

``m_l(a, b) = (-1)**l / (2 sqrt(ab) a**l)`` and ``j_l(a, b) = (-1)**l / (2 sqrt(ab) b**l)``
are monomials ``c a**p b**q`` with half-integer exponents.  Their derivatives
are taken exactly and evaluated in Q(sqrt 2) using ``sqrt a = sqrt2 - 1`` and
``sqrt b = sqrt2 + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..exactnum import QuadNum
from ..wsmodel import model_coordinate, model_edges

__all__ = ["HalfMonomial", "DerivativeReport", "verify_parameter_derivatives"]

_SQRT_A = QuadNum(-1, 1)
_SQRT_B = QuadNum(1, 1)


def _half_power(root: QuadNum, p: Fraction) -> QuadNum:
    return root ** int(2 * p)


@dataclass(frozen=True)
class HalfMonomial:
    """``coeff * a**pa * b**pb`` with ``pa, pb`` in (1/2) Z."""

    coeff: Fraction
    pa: Fraction
    pb: Fraction

    def d_a(self) -> "HalfMonomial":
        return HalfMonomial(self.coeff * self.pa, self.pa - 1, self.pb)

    def d_b(self) -> "HalfMonomial":
        return HalfMonomial(self.coeff * self.pb, self.pa, self.pb - 1)

    def at_model(self) -> QuadNum:
        return QuadNum(self.coeff) * _half_power(_SQRT_A, self.pa) * _half_power(_SQRT_B, self.pb)


def m_closed(ell: int) -> HalfMonomial:
    return HalfMonomial(Fraction((-1) ** ell, 2), Fraction(-2 * ell - 1, 2), Fraction(-1, 2))


def j_closed(ell: int) -> HalfMonomial:
    return HalfMonomial(Fraction((-1) ** ell, 2), Fraction(-1, 2), Fraction(-2 * ell - 1, 2))


def _partial_fraction_ok(ell: int, A: Fraction, B: Fraction) -> bool:
    """``1/((w-A)**l (w-B)) = sum_j C_j/(w-A)**j + D/(w-B)`` at sample points."""
    C = {j: -1 / (B - A) ** (ell - j + 1) for j in range(1, ell + 1)}
    D = 1 / (B - A) ** ell
    for w in (Fraction(7, 3), Fraction(-5, 2), Fraction(11)):
        lhs = 1 / ((w - A) ** ell * (w - B))
        rhs = sum(C[j] / (w - A) ** j for j in C) + D / (w - B)
        if lhs != rhs:
            return False
    return True


@dataclass
class DerivativeReport:
    ell: int
    checks: dict[str, bool] = field(default_factory=dict)
    values: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def __str__(self):
        lines = [f"parameter derivatives l={self.ell}: {'PASS' if self.passed else 'FAIL'}"]
        lines += [f"  {k}: {'ok' if ok else 'FAIL'}" for k, ok in self.checks.items()]
        return "\n".join(lines)


def verify_parameter_derivatives(ell: int) -> DerivativeReport:
    """Compare exact derivatives of ``m_l, j_l`` with the identities used by the recursion.

    * ``dm_l/da = (l + 1/2) m_{l+1}`` and ``dj_l/db = (l + 1/2) j_{l+1}``;
    * ``dm_l/db = J_1/(2 (B-A)**l) - sum_p M_p/(2 (B-A)**(l-p+1))`` from the
      partial-fraction decomposition of ``1/((w-A)**l (w-B))``, and its mirror
      for ``dj_l/da``.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    rep = DerivativeReport(ell)
    a, b = model_edges()
    m = lambda k: model_coordinate("M", k)  # noqa: E731
    j = lambda k: model_coordinate("J", k)  # noqa: E731
    half = Fraction(1, 2)

    rep.checks["closed forms at model point"] = m_closed(ell).at_model() == m(ell) and j_closed(ell).at_model() == j(ell)

    dma = m_closed(ell).d_a().at_model()
    rep.checks["dm/da = (l+1/2) m_(l+1)"] = dma == m(ell + 1) * (ell + half)
    djb = j_closed(ell).d_b().at_model()
    rep.checks["dj/db = (l+1/2) j_(l+1)"] = djb == j(ell + 1) * (ell + half)

    dmb = m_closed(ell).d_b().at_model()
    rhs = j(1) * half / (b - a) ** ell - sum((m(p) * half / (b - a) ** (ell - p + 1) for p in range(1, ell + 1)), QuadNum(0))
    rep.checks["dm/db partial fractions"] = dmb == rhs
    rep.values["dm/db"] = str(dmb)

    dja = j_closed(ell).d_a().at_model()
    rhs = m(1) * half / (a - b) ** ell - sum((j(p) * half / (a - b) ** (ell - p + 1) for p in range(1, ell + 1)), QuadNum(0))
    rep.checks["dj/da partial fractions"] = dja == rhs
    rep.values["dj/da"] = str(dja)

    rep.checks["partial fraction coefficients"] = _partial_fraction_ok(ell, Fraction(1, 3), Fraction(4))
    return rep
