"""Literal transcriptions of the explicit generating functions F_1 .. F_4.

``sqrt(z_i**2 - 6 z_i + 1)`` is the generator ``s_i`` of the model relation
(principal branch, ``s_i(0) = 1``).  The F_4 bracket is kept as the printed
LaTeX text and parsed, so that every coefficient is read off verbatim.
"""

import itertools
import re

from tdm.symcore import BETA, Poly, RatExpr, S, Z, _BIT, atom_q, atom_var
from tdm.wsmodel import model_relation

REL = model_relation()

F4_BRACKET = r"""
3 e_4^3-9 e_3 e_4^2-5 e_2 e_4^2+333 e_1 e_4^2-3723 e_4^2+30 e_2 e_3 e_4-264 e_1 e_3 e_4
+2142 e_3 e_4-71 e_2^2 e_4+738 e_1 e_2 e_4-4354 e_2 e_4-1788 e_1^2 e_4+20538 e_1 e_4
-58863 e_4-2 e_2 e_3^2+18 e_1 e_3^2-156 e_3^2+3 e_2^2 e_3-20 e_1 e_2 e_3+126 e_2 e_3
+48 e_1 e_3-297 e_3+e_2^3-15 e_1 e_2^2+85 e_2^2+58 e_1^2 e_2-654 e_1 e_2+1843 e_2
-18 e_1^3+216 e_1^2-675 e_1+159
"""


def parse_bracket(text: str, nvars: int = 4) -> dict[tuple[int, ...], int]:
    """``{(p_1, ..., p_n): C}`` for a sum of terms ``C e_1^p_1 ... e_n^p_n``."""
    text = " ".join(text.split())
    out: dict[tuple[int, ...], int] = {}
    for m in re.finditer(r"([+-]?)\s*(\d*)\s*((?:e_\d(?:\^\d+)?\s*)*)", text):
        if not m.group(0).strip():
            continue
        c = int(m.group(2) or 1) * (-1 if m.group(1) == "-" else 1)
        p = [0] * nvars
        for k, ex in re.findall(r"e_(\d)(?:\^(\d+))?", m.group(3)):
            p[int(k) - 1] += int(ex or 1)
        out[tuple(p)] = out.get(tuple(p), 0) + c
    return out


def _z(i):
    return RatExpr.var(Z(i), REL)


def _s(i):
    return RatExpr.var(S(i), REL)


def elementary(k: int, n: int) -> Poly:
    terms = {sum(_BIT[Z(i).slot] for i in c): 1 for c in itertools.combinations(range(1, n + 1), k)}
    return Poly(terms, REL)


def F1() -> RatExpr:
    return (3 - _z(1) - _s(1)) / 2


def F2() -> RatExpr:
    z1, z2 = _z(1), _z(2)
    beta = RatExpr.var(BETA, REL)
    return z1 * z2 / (z1 - z2) ** 2 * ((z1 * z2 - 3 * (z1 + z2) + 1) / (_s(1) * _s(2)) - 1) / beta


def F3() -> RatExpr:
    z1, z2, z3 = _z(1), _z(2), _z(3)
    beta = RatExpr.var(BETA, REL)
    den = (_s(1) * _s(2) * _s(3)) ** 3 * beta**2
    return 16 * z1 * z2 * z3 * (z1 * z2 * z3 - (z1 + z2 + z3) + 6) / den


def F4(bracket: dict[tuple[int, ...], int] | None = None) -> RatExpr:
    """``32 e_4 [...] / (beta^3 prod (z_i^2-6z_i+1)^(5/2))`` built in factored form.

    ``(z^2-6z+1)^(5/2) = s^5 = s q^2`` with ``q = s^2``, so the expression is
    ``32 e_4 [...] s_1 s_2 s_3 s_4 / (beta^3 prod q_i^3)``.
    """
    coeffs = parse_bracket(F4_BRACKET) if bracket is None else bracket
    es = [elementary(k, 4) for k in range(1, 5)]
    br = Poly.const(0, REL)
    for p, c in coeffs.items():
        t = Poly.const(c, REL)
        for k in range(4):
            if p[k]:
                t = t * es[k] ** p[k]
        br = br + t
    sprod = Poly.const(1, REL)
    for i in range(1, 5):
        sprod = sprod * Poly.var(S(i), 1, REL)
    atoms = {atom_q(i): 3 for i in range(1, 5)}
    atoms[atom_var(BETA)] = 3
    return RatExpr.factored(es[3] * br * sprod * 32, 1, atoms)


EXPLICIT = {1: F1, 2: F2, 3: F3, 4: F4}
