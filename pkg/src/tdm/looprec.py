"""Loop-equation recursion for the leading-order multi-point Green functions.

Two exact engines share the same building blocks:

* :class:`GreenCache` carries ``A, B, M_l, J_l`` fully symbolically through
  every level (practical up to v = 5 in pure Python).
* :class:`PointGreenCache` evaluates ``G_{v,0}`` at a fixed parameter point.
  Each level is kept as a Taylor polynomial in the parameter deviations,
  truncated at the number of derivatives later levels still take, so the final
  level is exactly ``green(v)`` with the point substituted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping

from .exactnum import QuadNum
from .symcore import (
    BITS,
    FIELD,
    MAX_ELL,
    A,
    B,
    BETA,
    GENERIC,
    J,
    M,
    Poly,
    RatExpr,
    Relation,
    S,
    Var,
    Z,
    _BIT,
    _SHIFT,
    _SLOT_VAR,
    _atom_mul,
    _mul_terms,
    _prune,
    atom_diff,
    atom_q,
    atom_var,
    expr_normalize,
)

log = logging.getLogger(__name__)

DEFAULT_VMAX = 7


class RecursionDepthError(ValueError):
    """An expression references M_l/J_l beyond what the loop operator covers."""


# ----------------------------------------------------------------------------
# building blocks
# ----------------------------------------------------------------------------


def _inv_atom(atom: tuple, e: int = 1) -> RatExpr:
    return RatExpr(Poly.const(1), 1, {atom: e})


def _var(v: Var) -> RatExpr:
    return RatExpr.var(v)


def build_dA_dV(k: int) -> RatExpr:
    """``1/(M_1 (z_k - A) s_k)`` stored as ``s_k / (M_1 (z_k-A)**2 (z_k-B))``."""
    if k < 1:
        raise ValueError("variable index must be >= 1")
    return RatExpr.factored(Poly.var(S(k)), 1,
                            {atom_var(M(1)): 1, atom_diff(Z(k), A): 2, atom_diff(Z(k), B): 1})


def build_dB_dV(k: int) -> RatExpr:
    if k < 1:
        raise ValueError("variable index must be >= 1")
    return RatExpr.factored(Poly.var(S(k)), 1,
                            {atom_var(J(1)): 1, atom_diff(Z(k), A): 1, atom_diff(Z(k), B): 2})


def build_dM_dV(ell: int, k: int) -> RatExpr:
    if ell < 1 or k < 1:
        raise ValueError("ell and k must be >= 1")
    za, ba = atom_diff(Z(k), A), atom_diff(B, A)
    first = _var(M(ell + 1)) - _var(M(1)) * _inv_atom(za, ell)
    second = _var(J(1)) * _inv_atom(ba, ell) - _var(J(1)) * _inv_atom(za, ell)
    for p in range(1, ell + 1):
        second = second - _var(M(p)) * _inv_atom(ba, ell - p + 1)
    return build_dA_dV(k) * first * Fraction(2 * ell + 1, 2) + build_dB_dV(k) * second * Fraction(1, 2)


def build_dJ_dV(ell: int, k: int) -> RatExpr:
    if ell < 1 or k < 1:
        raise ValueError("ell and k must be >= 1")
    zb, ba = atom_diff(Z(k), B), atom_diff(B, A)
    # (A - B)**n = (-1)**n (B - A)**n
    first = _var(J(ell + 1)) - _var(J(1)) * _inv_atom(zb, ell)
    second = _var(M(1)) * _inv_atom(ba, ell) * (-1) ** ell - _var(M(1)) * _inv_atom(zb, ell)
    for p in range(1, ell + 1):
        n = ell - p + 1
        second = second - _var(J(p)) * _inv_atom(ba, n) * (-1) ** n
    return build_dB_dV(k) * first * Fraction(2 * ell + 1, 2) + build_dA_dV(k) * second * Fraction(1, 2)


def build_G2() -> RatExpr:
    """``(1/beta)(z1-z2)**-2 [(z1 z2 - (A+B)(z1+z2)/2 + AB)/(s1 s2) - 1]``."""
    z1, z2 = Poly.var(Z(1)), Poly.var(Z(2))
    a, b = Poly.var(A), Poly.var(B)
    bracket_num = z1 * z2 - (a + b) * (z1 + z2) * Fraction(1, 2) + a * b
    ratio = RatExpr.factored(bracket_num * Poly.var(S(1)) * Poly.var(S(2)), 1, {
        atom_diff(Z(1), A): 1, atom_diff(Z(1), B): 1, atom_diff(Z(2), A): 1, atom_diff(Z(2), B): 1})
    return (ratio - 1) * _inv_atom(atom_diff(Z(2), Z(1)), 2) * _inv_atom(atom_var(BETA))


_BLOCKS: dict[tuple, RatExpr] = {}


def _block(kind: str, ell: int, k: int) -> RatExpr:
    key = (kind, ell, k)
    blk = _BLOCKS.get(key)
    if blk is None:
        if kind == "A":
            blk = build_dA_dV(k)
        elif kind == "B":
            blk = build_dB_dV(k)
        elif kind == "M":
            blk = build_dM_dV(ell, k)
        else:
            blk = build_dJ_dV(ell, k)
        _BLOCKS[key] = blk
    return blk


def _operator_terms(v: int) -> list[tuple[Var, tuple]]:
    """``(parameter, block key)`` pairs of the loop operator at level v."""
    terms = [(A, ("A", 0, v)), (B, ("B", 0, v))]
    for ell in range(1, v - 2):
        terms.append((M(ell), ("M", ell, v)))
        terms.append((J(ell), ("J", ell, v)))
    return terms


def max_ell(x: RatExpr) -> int:
    """Largest l with M_l or J_l present in x (0 if none)."""
    top = 0
    for var in x.variables():
        if var.kind in ("M", "J"):
            top = max(top, var.index)
    return top


def apply_loop_operator(v: int, x: RatExpr) -> RatExpr:
    """Apply ``dA/dV(z_v) d_A + dB/dV(z_v) d_B + sum_l (dM_l/dV d_M_l + dJ_l/dV d_J_l)``."""
    if v < 3:
        raise ValueError("the loop operator is defined for v >= 3")
    if max_ell(x) > v - 3:
        raise RecursionDepthError(f"expression references M/J beyond l = {v - 3}")
    total = RatExpr(Poly.const(0))
    for var, key in _operator_terms(v):
        d = x.diff(var)
        if d.is_zero():
            continue
        total = total + _block(*key) * d
    return total


# ----------------------------------------------------------------------------
# symbolic cache
# ----------------------------------------------------------------------------


class GreenCache:
    """Memoized symbolic ``G_{v,0}``; level v is built from level v-1."""

    def __init__(self, vmax: int = DEFAULT_VMAX):
        self.vmax = vmax
        self.entries: dict[int, RatExpr] = {}

    def get(self, v: int) -> RatExpr:
        if v < 2:
            raise ValueError("symbolic Green functions start at v = 2")
        if v > self.vmax:
            raise ValueError(f"v = {v} exceeds the configured maximum {self.vmax}")
        if v not in self.entries:
            if v == 2:
                self.entries[2] = build_G2()
            else:
                prev = self.get(v - 1)
                log.info("symbolic recursion: building G_%d,0", v)
                g = apply_loop_operator(v, prev) * Fraction(-1)
                self.entries[v] = g * _inv_atom(atom_var(BETA))
        return self.entries[v]

    def __contains__(self, v: int) -> bool:
        return v in self.entries


_DEFAULT_CACHE = GreenCache()


def green(v: int, cache: GreenCache | None = None) -> RatExpr:
    return (cache or _DEFAULT_CACHE).get(v)


# ----------------------------------------------------------------------------
# Taylor expansion around a parameter point
# ----------------------------------------------------------------------------

_PARAM_SLOTS = list(range(1, 3 + 2 * MAX_ELL))  # A, B, M_1, J_1, ..., J_MAX
_PARAM_LOW_SHIFT = _SHIFT[_PARAM_SLOTS[-1]]
_PARAM_BLOCK = (1 << (len(_PARAM_SLOTS) * BITS)) - 1


def delta_degree(m: int) -> int:
    """Total degree of a packed monomial in the parameter generators."""
    pm = (m >> _PARAM_LOW_SHIFT) & _PARAM_BLOCK
    d = 0
    while pm:
        d += pm & FIELD
        pm >>= BITS
    return d


def _truncate_terms(terms: dict, order: int) -> dict:
    return {m: c for m, c in terms.items() if delta_degree(m) <= order}


def _grade(terms: dict) -> dict[int, dict]:
    out: dict[int, dict] = {}
    for m, c in terms.items():
        out.setdefault(delta_degree(m), {})[m] = c
    return out


def _jet_mul_terms(x: dict, y: dict, order: int, rel: Relation) -> dict:
    gx, gy = _grade(x), _grade(y)
    out: dict = {}
    for dx, tx in gx.items():
        for dy, ty in gy.items():
            if dx + dy > order:
                continue
            for m, c in _mul_terms(tx, ty, rel).items():
                w = out.get(m)
                out[m] = c if w is None else w + c
    return _prune(out)


def jet_mul(x: RatExpr, y: RatExpr, order: int) -> RatExpr:
    """Product of two parameter jets truncated at total deviation degree ``order``."""
    rel = x.rel
    atoms = dict(x.atoms)
    for a, e in y.atoms.items():
        atoms[a] = atoms.get(a, 0) + e
    num = _jet_mul_terms(x.num.terms, y.num.terms, order, rel)
    return expr_normalize(RatExpr(Poly(num, rel), x.const * y.const, atoms))


def jet_truncate(x: RatExpr, order: int) -> RatExpr:
    return expr_normalize(RatExpr(Poly(_truncate_terms(x.num.terms, order), x.rel),
                                  x.const, x.atoms, x.rest))


def jet_diff(x: RatExpr, v: Var) -> RatExpr:
    """Derivative of a jet with respect to a parameter deviation."""
    return expr_normalize(RatExpr(x.num.diff_explicit(v), x.const, x.atoms, x.rest))


def _binom_half(n: int) -> Fraction:
    """Binomial coefficient C(1/2, n)."""
    c = Fraction(1)
    for k in range(n):
        c = c * (Fraction(1, 2) - k) / (k + 1)
    return c


def _binom_neg(e: int, n: int) -> int:
    """C(-e, n) = (-1)**n C(e+n-1, n)."""
    return (-1) ** n * comb(e + n - 1, n)


def _qconst(c):
    if isinstance(c, QuadNum) and c.surd == 0:
        return c.rat
    return c


class _Expander:
    """Taylor-expands generic expressions around ``point`` (model relation)."""

    def __init__(self, point: Mapping[Var, QuadNum]):
        self.point = {v: QuadNum(c) if not isinstance(c, QuadNum) else c for v, c in point.items()}
        self.a = self.point[A]
        self.b = self.point[B]
        self.rel = Relation(self.a, self.b)
        self._sigma: dict[tuple[int, int], RatExpr] = {}

    def zlin(self, i: int, edge: QuadNum) -> Poly:
        return Poly({_BIT[Z(i).slot]: 1}, self.rel) - edge

    def _one(self) -> RatExpr:
        return RatExpr(Poly.const(1, self.rel))

    def inv_edge_power(self, i: int, which: Var, e: int, order: int) -> RatExpr:
        """Jet of ``(z_i - W)**-e`` with W = edge + deviation."""
        other = self.b if which == A else self.a
        edge = self.a if which == A else self.b
        # (z - edge)**-1 = (z - other)/q
        zo = self.zlin(i, other)
        dbit = _BIT[which.slot]
        total: dict = {}
        top = e + order
        q = Poly(dict(self.rel.square(i)), self.rel)
        for n in range(order + 1):
            c = comb(e + n - 1, n)
            p = (zo ** (e + n)) * (q ** (order - n)) * c
            for m, cc in p.terms.items():
                mm = m + n * dbit
                w = total.get(mm)
                total[mm] = cc if w is None else w + cc
        return expr_normalize(RatExpr(Poly(_prune(total), self.rel), 1, {atom_q(i): top}))

    def inv_const_power(self, lin: Poly, value: QuadNum, e: int, order: int) -> RatExpr:
        """Jet of ``(value + lin)**-e`` where ``lin`` is linear in deviations."""
        inv = value.inverse()
        total = Poly.const(0, self.rel)
        power = Poly.const(1, self.rel)
        for n in range(order + 1):
            total = total + power * _qconst(_binom_neg(e, n) * inv ** (e + n))
            power = Poly(_truncate_terms((power * lin).terms, order), self.rel)
        return RatExpr(total)

    def sigma(self, i: int, order: int) -> RatExpr:
        """Jet of ``s_i(A, B) / s_i(a, b)``."""
        key = (i, order)
        if key not in self._sigma:
            fa = self._sqrt_factor(i, A, order)
            fb = self._sqrt_factor(i, B, order)
            self._sigma[key] = jet_mul(fa, fb, order)
        return self._sigma[key]

    def _sqrt_factor(self, i: int, which: Var, order: int) -> RatExpr:
        # sqrt(1 - d/(z - edge)) = sum_n C(1/2, n) (-d)**n (z - other)**n / q**n
        other = self.b if which == A else self.a
        zo = self.zlin(i, other)
        q = Poly(dict(self.rel.square(i)), self.rel)
        dbit = _BIT[which.slot]
        total: dict = {}
        for n in range(order + 1):
            c = _binom_half(n) * (-1) ** n
            p = (zo**n) * (q ** (order - n)) * c
            for m, cc in p.terms.items():
                mm = m + n * dbit
                w = total.get(mm)
                total[mm] = cc if w is None else w + cc
        return expr_normalize(RatExpr(Poly(_prune(total), self.rel), 1, {atom_q(i): order}))

    def shift_poly(self, terms: dict, order: int) -> dict:
        """Numerator with every parameter P replaced by ``P0 + dP`` (truncated)."""
        rel = self.rel
        cache: dict[tuple[int, int], list[tuple[int, object]]] = {}
        pslots = [(v.slot, _SHIFT[v.slot], _BIT[v.slot], c) for v, c in self.point.items()]
        pmask = 0
        for slot, sh, _, _ in pslots:
            pmask |= FIELD << sh
        out: dict = {}
        for m, c in terms.items():
            if not m & pmask:
                w = out.get(m)
                out[m] = c if w is None else w + c
                continue
            partial = {m & ~pmask: c}
            for slot, sh, bit, val in pslots:
                e = (m >> sh) & FIELD
                if not e:
                    continue
                key = (slot, e)
                exp = cache.get(key)
                if exp is None:
                    exp = cache[key] = [(k * bit, _qconst(comb(e, k) * val ** (e - k)))
                                        for k in range(min(e, order) + 1)]
                nxt: dict = {}
                for pm, pc in partial.items():
                    dpm = delta_degree(pm)
                    for dm, dc in exp:
                        if dpm + dm // bit > order:
                            break
                        mm = pm + dm
                        w = nxt.get(mm)
                        nxt[mm] = pc * dc if w is None else w + pc * dc
                partial = nxt
            for mm, cc in partial.items():
                w = out.get(mm)
                out[mm] = cc if w is None else w + cc
        return _prune({m: _qconst(c) for m, c in out.items()})

    def expand(self, x: RatExpr, order: int) -> RatExpr:
        """Taylor jet of a generic expression, truncated at ``order``."""
        if x.rel != GENERIC:
            raise ValueError("expand expects a generic (unspecialized) expression")
        if not x.rest.is_const():
            raise ValueError("expand does not support residual denominators")
        rel = self.rel
        # numerator grouped by s-pattern; s_i carries its own deviation factor
        groups: dict[int, dict] = {}
        s_mask = 0
        s_slots = [(i, S(i).slot) for i in range(1, 13)]
        for _, slot in s_slots:
            s_mask |= FIELD << _SHIFT[slot]
        for m, c in x.num.terms.items():
            groups.setdefault(m & s_mask, {})[m & ~s_mask] = c
        total = RatExpr(Poly.const(0, rel))
        for pattern, terms in sorted(groups.items()):
            shifted = RatExpr(Poly(self.shift_poly(terms, order), rel))
            idx = [i for i, slot in s_slots if (pattern >> _SHIFT[slot]) & 1]
            part = shifted
            for i in idx:
                part = jet_mul(part, self.sigma(i, order), order)
            part = RatExpr(Poly({m + pattern: c for m, c in part.num.terms.items()}, rel),
                           part.const, part.atoms)
            total = total + part
        # denominator
        factor = RatExpr.const_expr(Fraction(1) / x.const if not isinstance(x.const, int)
                                    else Fraction(1, x.const), rel)
        keep: dict = {}
        for atom, e in sorted(x.atoms.items()):
            kind = atom[0]
            if kind == "v":
                var = _SLOT_VAR[atom[1]]
                if var in self.point:
                    lin = Poly({_BIT[var.slot]: 1}, rel)
                    factor = jet_mul(factor, self.inv_const_power(lin, self.point[var], e, order), order)
                else:
                    keep[atom] = e
            elif kind == "l":
                xv, yv = _SLOT_VAR[atom[1]], _SLOT_VAR[atom[2]]
                if xv.kind == "Z" and yv in (A, B):
                    factor = jet_mul(factor, self.inv_edge_power(xv.index, yv, e, order), order)
                elif xv in self.point and yv in self.point:
                    lin = Poly({_BIT[xv.slot]: 1, _BIT[yv.slot]: -1}, rel)
                    value = self.point[xv] - self.point[yv]
                    factor = jet_mul(factor, self.inv_const_power(lin, value, e, order), order)
                else:
                    keep[atom] = e
            else:
                raise ValueError("unexpected atom in a generic expression")
        out = jet_mul(total, factor, order)
        return expr_normalize(RatExpr(out.num, out.const, {**out.atoms, **{
            a: out.atoms.get(a, 0) + e for a, e in keep.items()}}))


def taylor_expand(x: RatExpr, point: Mapping[Var, object], order: int) -> RatExpr:
    """Jet of a generic expression at ``point`` up to total deviation degree ``order``.

    In the result the parameter generators stand for deviations from the point.
    ``order = 0`` coincides with :func:`tdm.symcore.expr_substitute`.
    """
    return _Expander(point).expand(x, order)


class PointGreenCache:
    """Exact ``G_{v,0}`` at a fixed parameter point, built through parameter jets."""

    def __init__(self, point: Mapping[Var, object], vmax: int = DEFAULT_VMAX):
        self.point = dict(point)
        self.vmax = vmax
        self._exp = _Expander(self.point)
        self._jets: dict[int, RatExpr] = {}
        self._orders: dict[int, int] = {}
        self._blocks: dict[tuple, RatExpr] = {}
        self.entries: dict[int, RatExpr] = {}

    @property
    def rel(self) -> Relation:
        return self._exp.rel

    def _need(self, v: int) -> None:
        ells = v - 2
        for ell in range(1, ells + 1):
            if M(ell) not in self.point or J(ell) not in self.point:
                raise ValueError(f"parameter point lacks M_{ell}/J_{ell} needed for v = {v}")

    def _block_jet(self, key: tuple, order: int) -> RatExpr:
        ck = (key, order)
        blk = self._blocks.get(ck)
        if blk is None:
            blk = self._blocks[ck] = self._exp.expand(_block(*key), order)
        return blk

    def jet(self, v: int, order: int) -> RatExpr:
        """``G_{v,0}`` as a jet of the given order in the parameter deviations."""
        have = self._orders.get(v, -1)
        if have >= order:
            j = self._jets[v]
            return j if have == order else jet_truncate(j, order)
        if v == 2:
            j = self._exp.expand(build_G2(), order)
        else:
            prev = self.jet(v - 1, order + 1)
            log.info("point recursion: G_%d,0 at jet order %d", v, order)
            total = RatExpr(Poly.const(0, self.rel))
            for var, key in _operator_terms(v):
                d = jet_diff(prev, var)
                if d.is_zero():
                    continue
                total = total + jet_mul(self._block_jet(key, order), d, order)
            beta_inv = RatExpr(Poly.const(-1, self.rel), 1, {atom_var(BETA): 1})
            j = total * beta_inv
        self._jets[v] = j
        self._orders[v] = order
        return j

    def get(self, v: int) -> RatExpr:
        if v < 2:
            raise ValueError("v must be >= 2")
        if v > self.vmax:
            raise ValueError(f"v = {v} exceeds the configured maximum {self.vmax}")
        self._need(v)
        if v not in self.entries:
            self.entries[v] = self.jet(v, 0)
        return self.entries[v]


# ----------------------------------------------------------------------------
# structure check
# ----------------------------------------------------------------------------


@dataclass
class StructureReport:
    v: int
    checks: dict[str, bool] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def __str__(self):
        lines = [f"structure v={self.v}: {'PASS' if self.passed else 'FAIL'}"]
        for name, ok in self.checks.items():
            extra = self.details.get(name, "")
            lines.append(f"  {name}: {'ok' if ok else 'FAIL'} {extra}".rstrip())
        return "\n".join(lines)


def check_structure(v: int, g: RatExpr) -> StructureReport:
    """Check a specialized ``g_{v,0}`` against the one-cut structural form.

    Expected canonical form: ``s_1...s_v * P(z) / (c * beta**(v-1) * prod q_i**(v-1))``
    with P s-free of degree at most 2v-5 in each z_i (net exponent v - 3/2).
    """
    rep = StructureReport(v)
    if v < 3:
        raise ValueError("structure check applies to v >= 3")
    rel = g.rel
    rep.checks["edges specialized"] = rel.edge_a is not None and rel.edge_b is not None
    beta_e = g.atoms.get(atom_var(BETA), 0)
    rep.checks["beta exponent"] = beta_e == v - 1 and g.num.degree(BETA) == 0
    rep.details["beta exponent"] = f"(found {beta_e}, expected {v - 1})"
    allowed = {atom_var(BETA)} | {atom_q(i) for i in range(1, v + 1)}
    extra = [a for a in g.atoms if a not in allowed]
    rep.checks["no (z_i-z_j) or other factors"] = not extra and g.rest.is_const()
    if extra:
        rep.details["no (z_i-z_j) or other factors"] = str(extra)
    powers = [g.atoms.get(atom_q(i), 0) for i in range(1, v + 1)]
    s_ok = True
    p_terms: dict = {}
    s_all = sum(_BIT[S(i).slot] for i in range(1, v + 1))
    for m, c in g.num.terms.items():
        if m & s_all != s_all:
            s_ok = False
            break
        p_terms[m - s_all] = c
    rep.checks["single s_i factor per variable"] = s_ok
    # the net exponent is (q_i power) - 1/2 since each s_i contributes q_i**(1/2)
    rep.checks["net exponent v-3/2"] = s_ok and all(p == v - 1 for p in powers)
    rep.details["net exponent v-3/2"] = f"(q powers {powers})"
    if s_ok:
        p = Poly(p_terms, rel)
        degs = [p.degree(Z(i)) for i in range(1, v + 1)]
        rep.checks["numerator degree <= 2v-5"] = all(d <= 2 * v - 5 for d in degs)
        rep.details["numerator degree <= 2v-5"] = f"(degrees {degs})"
    else:
        rep.checks["numerator degree <= 2v-5"] = False
    return rep
