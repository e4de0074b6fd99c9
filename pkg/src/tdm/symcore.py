"""Sparse multivariate polynomials and rational expressions.

Generators are ``beta, A, B, M_l, J_l, z_i, s_i`` where each ``s_i`` is a formal
square root subject to ``s_i**2 = (z_i - A)(z_i - B)``.  Monomials are packed
into a single Python int (one fixed-width field per generator) so that monomial
multiplication is integer addition.

Denominators of :class:`RatExpr` are kept factored over a small set of atoms
(variables, differences ``x - y`` of two variables and, once the edges are
numbers, the quadratics ``s_i**2``), times a positive rational constant and an
optional residual polynomial for anything that does not factor over the atoms.
``s_i`` never appears in a denominator: ``1/s_i`` is stored as
``s_i / ((z_i - A)(z_i - B))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Mapping

from .exactnum import QuadNum

__all__ = [
    "Var",
    "BETA",
    "A",
    "B",
    "M",
    "J",
    "Z",
    "S",
    "Poly",
    "RatExpr",
    "GENERIC",
    "poly_mul",
    "expr_arith",
    "expr_diff",
    "expr_substitute",
    "expr_normalize",
    "expr_equal",
]

BITS = 12
FIELD = (1 << BITS) - 1
MAX_ELL = 12
MAX_IDX = 12
NSLOTS = 3 + 2 * MAX_ELL + 2 * MAX_IDX


def _shift(slot: int) -> int:
    # slot 0 (beta) occupies the most significant field so that comparing
    # packed ints compares exponent vectors lexicographically in Var order
    return (NSLOTS - 1 - slot) * BITS


_SHIFT = [_shift(k) for k in range(NSLOTS)]
_BIT = [1 << s for s in _SHIFT]


# ----------------------------------------------------------------------------
# variables
# ----------------------------------------------------------------------------

_KINDS = ("BETA", "A", "B", "M", "J", "Z", "S")


@total_ordering
@dataclass(frozen=True)
class Var:
    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind in ("M", "J") and not 1 <= self.index <= MAX_ELL:
            raise ValueError(f"{self.kind} index must be in 1..{MAX_ELL}")
        if self.kind in ("Z", "S") and not 1 <= self.index <= MAX_IDX:
            raise ValueError(f"{self.kind} index must be in 1..{MAX_IDX}")

    @property
    def slot(self) -> int:
        k = self.kind
        if k == "BETA":
            return 0
        if k == "A":
            return 1
        if k == "B":
            return 2
        if k == "M":
            return 3 + 2 * (self.index - 1)
        if k == "J":
            return 4 + 2 * (self.index - 1)
        if k == "Z":
            return 3 + 2 * MAX_ELL + 2 * (self.index - 1)
        return 4 + 2 * MAX_ELL + 2 * (self.index - 1)

    def __lt__(self, other):
        if not isinstance(other, Var):
            return NotImplemented
        return self.slot < other.slot

    def __str__(self):
        if self.kind in ("BETA", "A", "B"):
            return {"BETA": "beta", "A": "A", "B": "B"}[self.kind]
        return f"{self.kind.lower() if self.kind in 'ZS' else self.kind}{self.index}"

    __repr__ = __str__


BETA = Var("BETA")
A = Var("A")
B = Var("B")


def M(ell: int) -> Var:
    return Var("M", ell)


def J(ell: int) -> Var:
    return Var("J", ell)


def Z(i: int) -> Var:
    return Var("Z", i)


def S(i: int) -> Var:
    return Var("S", i)


_SLOT_VAR: list[Var] = [None] * NSLOTS  # type: ignore[list-item]
_SLOT_VAR[0], _SLOT_VAR[1], _SLOT_VAR[2] = BETA, A, B
for _l in range(1, MAX_ELL + 1):
    _SLOT_VAR[M(_l).slot] = M(_l)
    _SLOT_VAR[J(_l).slot] = J(_l)
for _i in range(1, MAX_IDX + 1):
    _SLOT_VAR[Z(_i).slot] = Z(_i)
    _SLOT_VAR[S(_i).slot] = S(_i)

_S_SLOTS = [S(i).slot for i in range(1, MAX_IDX + 1)]
_S_MASK = sum(FIELD << _SHIFT[k] for k in _S_SLOTS)
# exponents of s_i never exceed 1 in a reduced monomial, so a product has an
# s_i**2 exactly when bit 1 of that field is set
_S_SQ_MASK = sum(2 << _SHIFT[k] for k in _S_SLOTS)
_A_BIT = _BIT[1]
_B_BIT = _BIT[2]


def mono_exponent(m: int, slot: int) -> int:
    return (m >> _SHIFT[slot]) & FIELD


def mono_items(m: int) -> list[tuple[Var, int]]:
    out = []
    for slot in range(NSLOTS):
        e = (m >> _SHIFT[slot]) & FIELD
        if e:
            out.append((_SLOT_VAR[slot], e))
    return out


def mono_degree(m: int) -> int:
    d = 0
    while m:
        d += m & FIELD
        m >>= BITS
    return d


def mono_from(exps: Mapping[Var, int]) -> int:
    m = 0
    for var, e in exps.items():
        if e < 0 or e > FIELD:
            raise ValueError(f"exponent {e} out of range")
        m += e * _BIT[var.slot]
    return m


def mono_str(m: int) -> str:
    parts = []
    for var, e in mono_items(m):
        parts.append(str(var) if e == 1 else f"{var}^{e}")
    return "*".join(parts) if parts else "1"


# ----------------------------------------------------------------------------
# s-relations
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Relation:
    """``s_i**2 = (z_i - edge_a)(z_i - edge_b)``; ``None`` keeps the edge symbolic."""

    edge_a: QuadNum | None = None
    edge_b: QuadNum | None = None

    def square(self, i: int) -> list[tuple[int, object]]:
        """Terms ``(monomial, coeff)`` of ``s_i**2`` under this relation."""
        zb = _BIT[Z(i).slot]
        out: dict[int, object] = {2 * zb: 1}
        a_terms = [(_A_BIT, 1)] if self.edge_a is None else [(0, self.edge_a)]
        b_terms = [(_B_BIT, 1)] if self.edge_b is None else [(0, self.edge_b)]
        for m, c in a_terms:
            out[zb + m] = out.get(zb + m, 0) - c
        for m, c in b_terms:
            out[zb + m] = out.get(zb + m, 0) - c
        for ma, ca in a_terms:
            for mb, cb in b_terms:
                out[ma + mb] = out.get(ma + mb, 0) + ca * cb
        return [(m, _simplify(c)) for m, c in out.items() if c != 0]


GENERIC = Relation()


def _simplify(c):
    if isinstance(c, QuadNum) and c.surd == 0:
        r = c.rat
        return r
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


# ----------------------------------------------------------------------------
# polynomials
# ----------------------------------------------------------------------------


def _reduce_into(out: dict, m: int, c, rel: Relation) -> None:
    """Accumulate ``c*m`` into ``out`` with every s_i**2 rewritten."""
    if not m & _S_SQ_MASK:
        v = out.get(m)
        out[m] = c if v is None else v + c
        return
    for idx, slot in enumerate(_S_SLOTS, start=1):
        if (m >> _SHIFT[slot]) & 2:
            base = m - 2 * _BIT[slot]
            for dm, dc in rel.square(idx):
                _reduce_into(out, base + dm, c * dc, rel)
            return


def _prune(d: dict) -> dict:
    return {m: c for m, c in d.items() if c != 0}


class Poly:
    """Sparse polynomial: ``terms`` maps packed monomials to nonzero coefficients.

    Coefficients may be ``int``, ``Fraction`` or :class:`QuadNum`.  The object is
    treated as immutable once built.
    """

    __slots__ = ("terms", "rel")

    def __init__(self, terms: Mapping[int, object] | None = None, rel: Relation = GENERIC):
        self.terms: dict[int, object] = {} if terms is None else dict(terms)
        self.rel = rel

    # -- constructors ----------------------------------------------------
    @classmethod
    def const(cls, c, rel: Relation = GENERIC) -> "Poly":
        return cls({0: c} if c != 0 else {}, rel)

    @classmethod
    def var(cls, v: Var, power: int = 1, rel: Relation = GENERIC) -> "Poly":
        if v.kind == "S" and power > 1:
            return cls.var(v, 1, rel) ** power
        return cls({power * _BIT[v.slot]: 1}, rel)

    @classmethod
    def from_dict(cls, exps_to_coeff: Mapping[tuple, object], rel: Relation = GENERIC) -> "Poly":
        """Build from ``{((var, exp), ...): coeff}``; s-powers are reduced."""
        out: dict = {}
        for key, c in exps_to_coeff.items():
            p = cls.const(c, rel)
            for v, e in key:
                p = p * cls.var(v, e, rel)
            for m, cc in p.terms.items():
                out[m] = out.get(m, 0) + cc
        return cls(_prune(out), rel)

    # -- queries ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def const_value(self):
        return self.terms.get(0, 0)

    def __len__(self):
        return len(self.terms)

    def variables(self) -> set[Var]:
        acc = 0
        for m in self.terms:
            acc |= m
        out = set()
        for slot in range(NSLOTS):
            if (acc >> _SHIFT[slot]) & FIELD:
                out.add(_SLOT_VAR[slot])
        return out

    def degree(self, v: Var) -> int:
        sh = _SHIFT[v.slot]
        return max(((m >> sh) & FIELD for m in self.terms), default=0)

    def min_degree(self, v: Var) -> int:
        sh = _SHIFT[v.slot]
        return min(((m >> sh) & FIELD for m in self.terms), default=0)

    def sorted_terms(self) -> list[tuple[int, object]]:
        """Terms in graded-lexicographic order (highest first)."""
        return sorted(self.terms.items(), key=lambda t: (mono_degree(t[0]), t[0]), reverse=True)

    def coeffs(self):
        return self.terms.values()

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "Poly") -> None:
        if self.rel != other.rel:
            raise ValueError("polynomials live in different s-relations")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.const(other, self.rel)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            out[m] = c if v is None else v + c
        return Poly(_prune(out), self.rel)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()}, self.rel)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            if other == 0:
                return Poly({}, self.rel)
            return Poly({m: c * other for m, c in self.terms.items()}, self.rel)
        self._check(other)
        return Poly(_mul_terms(self.terms, other.terms, self.rel), self.rel)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = Poly.const(1, self.rel)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_mono(self, m: int, c=1) -> "Poly":
        out: dict = {}
        rel = self.rel
        for mm, cc in self.terms.items():
            _reduce_into(out, mm + m, cc * c, rel)
        return Poly(_prune(out), rel)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.rel == other.rel and self.terms == other.terms
        return self.is_const() and self.const_value() == other

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus / substitution --------------------------------------------
    def diff_explicit(self, v: Var) -> "Poly":
        """Derivative treating every generator (including s_i) as independent."""
        slot = v.slot
        sh, bit = _SHIFT[slot], _BIT[slot]
        out = {}
        for m, c in self.terms.items():
            e = (m >> sh) & FIELD
            if e:
                out[m - bit] = c * e
        return Poly(out, self.rel)

    def split_s(self, i: int) -> tuple["Poly", "Poly"]:
        """``(p0, p1)`` with ``self = p0 + p1*s_i``."""
        slot = S(i).slot
        sh, bit = _SHIFT[slot], _BIT[slot]
        p0, p1 = {}, {}
        for m, c in self.terms.items():
            if (m >> sh) & 1:
                p1[m - bit] = c
            else:
                p0[m] = c
        return Poly(p0, self.rel), Poly(p1, self.rel)

    def s_indices(self) -> list[int]:
        acc = 0
        for m in self.terms:
            acc |= m
        return [i for i, slot in enumerate(_S_SLOTS, start=1) if (acc >> _SHIFT[slot]) & FIELD]

    def rename(self, mapping: Mapping[Var, Var]) -> "Poly":
        """Simultaneous renaming of generators (used for permutations)."""
        moves = [(_SHIFT[a.slot], _BIT[b.slot]) for a, b in mapping.items() if a != b]
        clear = 0
        for a, b in mapping.items():
            if a != b:
                clear |= FIELD << _SHIFT[a.slot]
        out: dict = {}
        for m, c in self.terms.items():
            nm = m & ~clear
            for sh, bit in moves:
                nm += ((m >> sh) & FIELD) * bit
            v = out.get(nm)
            out[nm] = c if v is None else v + c
        return Poly(_prune(out), self.rel)

    def substitute(self, bindings: Mapping[Var, object], rel: Relation | None = None) -> "Poly":
        """Replace generators by constants (Z and S are never substituted)."""
        rel = self.rel if rel is None else rel
        slots = []
        for v, val in bindings.items():
            if v.kind in ("Z", "S"):
                raise ValueError("z and s generators cannot be substituted")
            slots.append((_SHIFT[v.slot], v.slot, val))
        mask = 0
        for sh, _, _ in slots:
            mask |= FIELD << sh
        powers: dict[tuple[int, int], object] = {}
        out: dict = {}
        for m, c in self.terms.items():
            if m & mask:
                for sh, slot, val in slots:
                    e = (m >> sh) & FIELD
                    if e:
                        key = (slot, e)
                        pv = powers.get(key)
                        if pv is None:
                            pv = powers[key] = val**e
                        c = c * pv
                m &= ~mask
            v = out.get(m)
            out[m] = c if v is None else v + c
        return Poly(_prune({m: _simplify(c) for m, c in out.items()}), rel)

    def with_rel(self, rel: Relation) -> "Poly":
        return Poly(self.terms, rel)

    def map_coeffs(self, fn) -> "Poly":
        return Poly(_prune({m: fn(c) for m, c in self.terms.items()}), self.rel)

    # -- display --------------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            ms = mono_str(m)
            if ms == "1":
                parts.append(f"({c})")
            elif c == 1:
                parts.append(ms)
            else:
                parts.append(f"({c})*{ms}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Poly({self})"


def _mul_terms(a: dict, b: dict, rel: Relation) -> dict:
    if len(a) < len(b):
        a, b = b, a
    out: dict = {}
    get = out.get
    pending = []
    for m2, c2 in b.items():
        for m1, c1 in a.items():
            m = m1 + m2
            if m & _S_SQ_MASK:
                pending.append((m, c1 * c2))
                continue
            v = get(m)
            out[m] = c1 * c2 if v is None else v + c1 * c2
    for m, c in pending:
        _reduce_into(out, m, c, rel)
    return _prune(out)


def poly_mul(p: Poly, q: Poly) -> Poly:
    return p * q


# ----------------------------------------------------------------------------
# exact division by a monic-in-x divisor
# ----------------------------------------------------------------------------


def _divide_monic(terms: dict, x_slot: int, lower: list[tuple[int, dict]], deg: int):
    """Quotient of ``terms`` by ``x**deg + sum_j lower_j * x**j`` or None.

    ``lower`` lists ``(j, coeff_terms)`` where ``coeff_terms`` does not involve x
    or any s generator.  The numerator may involve s generators; they are inert
    because the divisor is s-free.
    """
    sh, bit = _SHIFT[x_slot], _BIT[x_slot]
    levels: dict[int, dict] = {}
    for m, c in terms.items():
        k = (m >> sh) & FIELD
        lvl = levels.get(k)
        if lvl is None:
            lvl = levels[k] = {}
        lvl[m - k * bit] = c
    if not levels:
        return {}
    top = max(levels)
    if top < deg:
        return None
    quotient: dict = {}
    for k in range(top, deg - 1, -1):
        cur = levels.pop(k, None)
        if not cur:
            continue
        cur = _prune(cur)
        if not cur:
            continue
        qk = k - deg
        for m, c in cur.items():
            quotient[m + qk * bit] = c
        for j, coeff in lower:
            tgt = qk + j
            lvl = levels.get(tgt)
            if lvl is None:
                lvl = levels[tgt] = {}
            for mc, cc in coeff.items():
                for m, c in cur.items():
                    mm = m + mc
                    v = lvl.get(mm)
                    lvl[mm] = -c * cc if v is None else v - c * cc
    for lvl in levels.values():
        for c in lvl.values():
            if c != 0:
                return None
    return quotient


# ----------------------------------------------------------------------------
# atoms of the factored denominator
# ----------------------------------------------------------------------------
#   ("v", slot)            the generator itself (beta, M_l, J_l, A, B, z_i)
#   ("l", x_slot, y_slot)  the difference x - y of two generators
#   ("q", i)               s_i**2 under the expression's relation


def atom_var(v: Var) -> tuple:
    if v.kind == "S":
        raise ValueError("s generators cannot be denominator atoms")
    return ("v", v.slot)


def atom_diff(x: Var, y: Var) -> tuple:
    return ("l", x.slot, y.slot)


def atom_q(i: int) -> tuple:
    return ("q", i)


def atom_poly(atom: tuple, rel: Relation) -> Poly:
    kind = atom[0]
    if kind == "v":
        return Poly({_BIT[atom[1]]: 1}, rel)
    if kind == "l":
        return Poly({_BIT[atom[1]]: 1, _BIT[atom[2]]: -1}, rel)
    return Poly(dict(rel.square(atom[1])), rel)


def atom_str(atom: tuple) -> str:
    kind = atom[0]
    if kind == "v":
        return str(_SLOT_VAR[atom[1]])
    if kind == "l":
        return f"({_SLOT_VAR[atom[1]]}-{_SLOT_VAR[atom[2]]})"
    return f"(s{atom[1]}^2)"


def _atom_divide(terms: dict, atom: tuple, rel: Relation):
    kind = atom[0]
    if kind == "v":
        sh, bit = _SHIFT[atom[1]], _BIT[atom[1]]
        out = {}
        for m, c in terms.items():
            if not (m >> sh) & FIELD:
                return None
            out[m - bit] = c
        return out
    if kind == "l":
        return _divide_monic(terms, atom[1], [(0, {_BIT[atom[2]]: -1})], 1)
    i = atom[1]
    zslot = Z(i).slot
    zb = _BIT[zslot]
    lower: dict[int, dict] = {}
    for m, c in rel.square(i):
        k = (m >> _SHIFT[zslot]) & FIELD
        if k == 2:
            continue
        lower.setdefault(k, {})[m - k * zb] = c
    return _divide_monic(terms, zslot, sorted(lower.items()), 2)


def _atom_mul(terms: dict, atom: tuple, rel: Relation, times: int = 1) -> dict:
    kind = atom[0]
    for _ in range(times):
        if kind == "v":
            bit = _BIT[atom[1]]
            terms = {m + bit: c for m, c in terms.items()}
        elif kind == "l":
            bx, by = _BIT[atom[1]], _BIT[atom[2]]
            out = {m + bx: c for m, c in terms.items()}
            for m, c in terms.items():
                mm = m + by
                v = out.get(mm)
                out[mm] = -c if v is None else v - c
            terms = _prune(out)
        else:
            terms = _mul_terms(terms, dict(rel.square(atom[1])), rel)
    return terms


def _atom_derivative(atom: tuple, v: Var, rel: Relation) -> Poly | None:
    """d(atom)/dv as a Poly, or None when it vanishes."""
    kind = atom[0]
    slot = v.slot
    if kind == "v":
        return Poly.const(1, rel) if atom[1] == slot else None
    if kind == "l":
        if atom[1] == slot:
            return Poly.const(1, rel)
        if atom[2] == slot:
            return Poly.const(-1, rel)
        return None
    q = atom_poly(atom, rel).diff_explicit(v)
    return None if q.is_zero() else q


# ----------------------------------------------------------------------------
# coefficient content
# ----------------------------------------------------------------------------


def _denominators(c):
    if isinstance(c, int):
        return (1,)
    if isinstance(c, Fraction):
        return (c.denominator,)
    if isinstance(c, QuadNum):
        return (_den_of(c.rat), _den_of(c.surd))
    raise TypeError(f"unsupported coefficient {c!r}")


def _den_of(x):
    return 1 if isinstance(x, int) else x.denominator


def _numerators(c):
    if isinstance(c, int):
        return (c,)
    if isinstance(c, Fraction):
        return (c.numerator,)
    return (_num_of(c.rat), _num_of(c.surd))


def _num_of(x):
    return x if isinstance(x, int) else x.numerator


def _scale_coeff(c, num: int, den: int):
    """``c * num / den`` keeping ints as ints where exact."""
    if isinstance(c, int):
        v = c * num
        return v // den if v % den == 0 else Fraction(v, den)
    if isinstance(c, Fraction):
        return _simplify(c * num / den)
    return QuadNum(_scale_coeff(c.rat, num, den), _scale_coeff(c.surd, num, den))


def _leading_sign(terms: dict) -> int:
    m = max(terms, key=lambda t: (mono_degree(t), t))
    c = terms[m]
    if isinstance(c, QuadNum):
        c = c.rat if c.rat != 0 else c.surd
    return 1 if c > 0 else -1


# ----------------------------------------------------------------------------
# rational expressions
# ----------------------------------------------------------------------------


class RatExpr:
    """``num / (const * prod(atom**e) * rest)`` with a normalized representation.

    Instances are immutable.  Build them with the helpers (:meth:`var`,
    :meth:`const`, arithmetic operators) rather than by hand; the constructor
    does not normalize.
    """

    __slots__ = ("num", "const", "atoms", "rest")

    def __init__(self, num: Poly, const=1, atoms: Mapping[tuple, int] | None = None,
                 rest: Poly | None = None):
        self.num = num
        self.const = const
        self.atoms: dict[tuple, int] = {} if atoms is None else {a: e for a, e in atoms.items() if e}
        self.rest = Poly.const(1, num.rel) if rest is None else rest

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_poly(cls, p: Poly) -> "RatExpr":
        return expr_normalize(cls(p))

    @classmethod
    def const_expr(cls, c, rel: Relation = GENERIC) -> "RatExpr":
        return expr_normalize(cls(Poly.const(c, rel)))

    @classmethod
    def var(cls, v: Var, rel: Relation = GENERIC) -> "RatExpr":
        return cls(Poly.var(v, 1, rel))

    @classmethod
    def factored(cls, num: Poly, const=1, atoms: Mapping[tuple, int] | None = None) -> "RatExpr":
        return expr_normalize(cls(num, const, atoms))

    @property
    def rel(self) -> Relation:
        return self.num.rel

    # -- views --------------------------------------------------------------
    @property
    def den(self) -> Poly:
        """Expanded denominator polynomial."""
        terms: dict = {0: self.const}
        for atom, e in sorted(self.atoms.items()):
            terms = _atom_mul(terms, atom, self.rel, e)
        p = Poly(terms, self.rel)
        if not self.rest.is_const() or self.rest.const_value() != 1:
            p = p * self.rest
        return p

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def variables(self) -> set[Var]:
        vs = self.num.variables() | self.rest.variables()
        for atom in self.atoms:
            if atom[0] == "q":
                vs.add(Z(atom[1]))
                vs |= atom_poly(atom, self.rel).variables()
            else:
                vs.update(_SLOT_VAR[s] for s in atom[1:])
        return vs

    def atom_exponent(self, atom: tuple) -> int:
        return self.atoms.get(atom, 0)

    # -- arithmetic ------------------------------------------------------------
    def _coerce(self, other) -> "RatExpr":
        if isinstance(other, RatExpr):
            if other.rel != self.rel:
                raise ValueError("expressions live in different s-relations")
            return other
        if isinstance(other, Poly):
            return RatExpr.from_poly(other)
        return RatExpr.const_expr(other, self.rel)

    def __add__(self, other):
        return _add(self, self._coerce(other), 1)

    __radd__ = __add__

    def __sub__(self, other):
        return _add(self, self._coerce(other), -1)

    def __rsub__(self, other):
        return _add(self._coerce(other), self, -1)

    def __neg__(self):
        return RatExpr(-self.num, self.const, self.atoms, self.rest)

    def __mul__(self, other):
        if not isinstance(other, (RatExpr, Poly)):
            if other == 0:
                return RatExpr(Poly({}, self.rel))
            return expr_normalize(RatExpr(self.num * other, self.const, self.atoms, self.rest))
        other = self._coerce(other)
        atoms = dict(self.atoms)
        for a, e in other.atoms.items():
            atoms[a] = atoms.get(a, 0) + e
        rest = self.rest
        if not other.rest.is_const():
            rest = rest * other.rest
        else:
            rest = rest * other.rest.const_value()
        return expr_normalize(RatExpr(self.num * other.num, self.const * other.const, atoms, rest))

    __rmul__ = __mul__

    def inverse(self) -> "RatExpr":
        if self.num.is_zero():
            raise ZeroDivisionError("division by a zero expression")
        num = self.num
        conj_factor = Poly.const(1, self.rel)
        # rationalize: multiply by the s-conjugate until the divisor is s-free
        for i in num.s_indices():
            p0, p1 = num.split_s(i)
            conj = p0 - p1 * Poly.var(S(i), 1, self.rel)
            num = num * conj
            conj_factor = conj_factor * conj
        new_num = self.den * conj_factor
        const, atoms, rest, sign = _factor_denominator(num)
        return expr_normalize(RatExpr(new_num * sign, const, atoms, rest))

    def __truediv__(self, other):
        if not isinstance(other, (RatExpr, Poly)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            inv = (1 / other) if isinstance(other, QuadNum) else Fraction(1) / other
            return self * _simplify(inv)
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = RatExpr.const_expr(1, self.rel)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if isinstance(other, (RatExpr, Poly, int, Fraction, QuadNum)):
            return expr_equal(self, other if isinstance(other, RatExpr) else self._coerce(other))
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    # -- structural helpers -----------------------------------------------------
    def rename(self, mapping: Mapping[Var, Var]) -> "RatExpr":
        """Rename generators, e.g. swap (z1, s1) with (z2, s2)."""
        slot_map = {a.slot: b.slot for a, b in mapping.items()}
        idx_map = {a.index: b.index for a, b in mapping.items() if a.kind == "Z"}
        atoms: dict = {}
        sign = 1
        for atom, e in self.atoms.items():
            if atom[0] == "v":
                na = ("v", slot_map.get(atom[1], atom[1]))
            elif atom[0] == "l":
                x, y = slot_map.get(atom[1], atom[1]), slot_map.get(atom[2], atom[2])
                na, flip = _canonical_diff(x, y)
                if flip and e % 2:
                    sign = -sign
            else:
                na = ("q", idx_map.get(atom[1], atom[1]))
            atoms[na] = atoms.get(na, 0) + e
        return expr_normalize(RatExpr(self.num.rename(mapping) * sign, self.const, atoms,
                                      self.rest.rename(mapping)))

    def substitute(self, bindings: Mapping[Var, object]) -> "RatExpr":
        return expr_substitute(self, bindings)

    def diff(self, v: Var) -> "RatExpr":
        return expr_diff(self, v)

    def __str__(self):
        den = [str(self.const)] if self.const != 1 else []
        for atom, e in sorted(self.atoms.items()):
            s = atom_str(atom)
            den.append(s if e == 1 else f"{s}^{e}")
        if not self.rest.is_const() or self.rest.const_value() != 1:
            den.append(f"({self.rest})")
        if not den:
            return f"({self.num})"
        return f"({self.num}) / ({'*'.join(den)})"

    def __repr__(self):
        return f"RatExpr({self})"


def _canonical_diff(x: int, y: int) -> tuple[tuple, bool]:
    """Orientation of a difference atom: larger slot first, except B - A."""
    if x > y:
        return ("l", x, y), False
    return ("l", y, x), True


def _add(x: RatExpr, y: RatExpr, sign: int) -> RatExpr:
    if y.num.is_zero():
        return x
    if x.num.is_zero():
        return -y if sign < 0 else y
    rel = x.rel
    atoms = dict(x.atoms)
    for a, e in y.atoms.items():
        if e > atoms.get(a, 0):
            atoms[a] = e
    cx, cy = x.const, y.const
    if isinstance(cx, int) and isinstance(cy, int):
        const = cx * cy // math.gcd(cx, cy)
        fx, fy = const // cx, const // cy
    else:
        const, fx, fy = cx * cy, cy, cx
    tx = x.num.terms
    for a, e in atoms.items():
        d = e - x.atoms.get(a, 0)
        if d:
            tx = _atom_mul(tx, a, rel, d)
    ty = y.num.terms
    for a, e in atoms.items():
        d = e - y.atoms.get(a, 0)
        if d:
            ty = _atom_mul(ty, a, rel, d)
    px, py = Poly(tx, rel), Poly(ty, rel)
    if x.rest == y.rest:
        rest = x.rest
    else:
        px, py = px * y.rest, py * x.rest
        rest = x.rest * y.rest
    out = dict(px.terms) if fx == 1 else {m: c * fx for m, c in px.terms.items()}
    for m, c in py.terms.items():
        c = c * fy if sign > 0 else -c * fy
        v = out.get(m)
        out[m] = c if v is None else v + c
    return expr_normalize(RatExpr(Poly(_prune(out), rel), const, atoms, rest))


def _candidate_atoms(p: Poly) -> list[tuple]:
    vs = sorted(v for v in p.variables() if v.kind != "S")
    cands = []
    zs = [v for v in vs if v.kind == "Z"]
    rel = p.rel
    for z in zs:
        if rel.edge_a is None and A in vs:
            cands.append(atom_diff(z, A))
        if rel.edge_b is None and B in vs:
            cands.append(atom_diff(z, B))
        cands.append(atom_q(z.index))
    for i, zi in enumerate(zs):
        for zj in zs[i + 1:]:
            cands.append(("l", zj.slot, zi.slot))
    if A in vs and B in vs:
        cands.append(atom_diff(B, A))
    return cands


def _factor_denominator(p: Poly):
    """Split an s-free polynomial into ``sign, const, atoms, rest``."""
    if p.is_zero():
        raise ZeroDivisionError("zero denominator")
    rel = p.rel
    terms = dict(p.terms)
    atoms: dict = {}
    # monomial content
    common = None
    for m in terms:
        common = m if common is None else _mono_min(common, m)
    if common:
        for var, e in mono_items(common):
            atoms[atom_var(var)] = e
        terms = {m - common: c for m, c in terms.items()}
    for atom in _candidate_atoms(Poly(terms, rel)):
        while True:
            q = _atom_divide(terms, atom, rel)
            if q is None or not q:
                break
            terms = q
            atoms[atom] = atoms.get(atom, 0) + 1
    # rational content and sign
    dl = 1
    for c in terms.values():
        for d in _denominators(c):
            dl = dl * d // math.gcd(dl, d)
    rest_terms = {m: _scale_coeff(c, dl, 1) for m, c in terms.items()}
    gn = 0
    for c in rest_terms.values():
        for n in _numerators(c):
            gn = math.gcd(gn, n)
    rest_terms = {m: _scale_coeff(c, 1, gn) for m, c in rest_terms.items()}
    sign = _leading_sign(rest_terms)
    if sign < 0:
        rest_terms = {m: -c for m, c in rest_terms.items()}
    const = Fraction(gn, dl)
    const = const.numerator if const.denominator == 1 else const
    rest = Poly(rest_terms, rel)
    if rest.is_const():
        c = rest.const_value()
        const = const * c
        rest = Poly.const(1, rel)
    if isinstance(const, QuadNum):
        raise AssertionError("non-rational denominator constant")
    # keep the constant positive; the sign travels with the numerator
    return const, atoms, rest, sign


def _mono_min(a: int, b: int) -> int:
    out = 0
    for sh in _SHIFT:
        ea, eb = (a >> sh) & FIELD, (b >> sh) & FIELD
        e = ea if ea < eb else eb
        if e:
            out += e << sh
    return out


def expr_normalize(x: RatExpr) -> RatExpr:
    """Cancel atom factors and rational content; deterministic result."""
    rel = x.rel
    num = x.num.terms
    if not num:
        return RatExpr(Poly({}, rel))
    atoms = dict(x.atoms)
    rest = x.rest
    const = x.const
    # denominator constants that are not rational are moved into the numerator
    if isinstance(const, QuadNum):
        inv = const.inverse()
        num = {m: c * inv for m, c in num.items()}
        const = 1
    # residual polynomial: try exact division and pull out atom factors
    if not rest.is_const():
        rc, ratoms, rrest, rsign = _factor_denominator(rest)
        if rsign < 0:
            num = {m: -c for m, c in num.items()}
        const = const * rc
        for a, e in ratoms.items():
            atoms[a] = atoms.get(a, 0) + e
        rest = rrest
        if not rest.is_const():
            q = poly_exact_div(Poly(num, rel), rest)
            if q is not None:
                num = q.terms
                rest = Poly.const(1, rel)
    elif rest.const_value() != 1:
        const = const * rest.const_value()
        rest = Poly.const(1, rel)
    # cancel atoms
    for atom in sorted(atoms):
        e = atoms[atom]
        while e > 0:
            q = _atom_divide(num, atom, rel)
            if q is None:
                break
            num = _prune(q)
            e -= 1
        atoms[atom] = e
    atoms = {a: e for a, e in atoms.items() if e}
    # rational content
    dl = 1
    for c in num.values():
        for d in _denominators(c):
            if d != 1:
                dl = dl * d // math.gcd(dl, d)
    if isinstance(const, Fraction):
        cn, cd = const.numerator, const.denominator
    else:
        cn, cd = const, 1
    # value = num / (cn/cd) = (num*dl*cd) / (cn*dl)
    scale = dl * cd
    if scale != 1:
        num = {m: _scale_coeff(c, scale, 1) for m, c in num.items()}
    den_c = cn * dl
    g = den_c
    for c in num.values():
        if g == 1:
            break
        for n in _numerators(c):
            g = math.gcd(g, n)
    new_num = num if g == 1 else {m: _scale_coeff(c, 1, g) for m, c in num.items()}
    new_const = den_c // g
    if new_const < 0:
        new_const = -new_const
        new_num = {m: -c for m, c in new_num.items()}
    return RatExpr(Poly(new_num, rel), new_const, atoms, rest)



def poly_exact_div(p: Poly, d: Poly) -> Poly | None:
    """Multivariate exact division (d must be s-free); None if not exact."""
    if d.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    rel = p.rel
    key = lambda m: (mono_degree(m & ~_S_MASK), m)
    lead = max(d.terms, key=key)
    lc = d.terms[lead]
    rem = dict(p.terms)
    quot: dict = {}
    while rem:
        m = max(rem, key=key)
        diff = m - lead
        if not _mono_divides(lead, m):
            return None
        c = rem[m]
        qc = c / lc if not isinstance(c, int) or not isinstance(lc, int) or c % lc else c // lc
        if isinstance(qc, Fraction):
            qc = _simplify(qc)
        quot[diff] = qc
        for mm, cc in d.terms.items():
            t = mm + diff
            v = rem.get(t, 0) - qc * cc
            if v == 0:
                rem.pop(t, None)
            else:
                rem[t] = v
    return Poly(quot, rel)


def _mono_divides(a: int, b: int) -> bool:
    for sh in _SHIFT:
        if ((a >> sh) & FIELD) > ((b >> sh) & FIELD):
            return False
    return True


# ----------------------------------------------------------------------------
# public operations
# ----------------------------------------------------------------------------


def expr_arith(op: str, x: RatExpr, y: RatExpr) -> RatExpr:
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown operation {op!r}")


def expr_equal(x: RatExpr, y: RatExpr) -> bool:
    return (x - y).num.is_zero()


def _s_derivative_atoms(v: Var, i: int, rel: Relation) -> list[tuple[tuple, int]]:
    """d s_i / dv = s_i * sum(coef / atom) over the returned ``(atom, coef*2)``."""
    if v.kind == "A" and rel.edge_a is None:
        return [(atom_diff(Z(i), A), -1)]
    if v.kind == "B" and rel.edge_b is None:
        return [(atom_diff(Z(i), B), -1)]
    if v.kind == "Z" and v.index == i:
        if rel.edge_a is None and rel.edge_b is None:
            return [(atom_diff(Z(i), A), 1), (atom_diff(Z(i), B), 1)]
        return [(atom_q(i), None)]  # handled via d(q)/dz
    return []


def expr_diff(x: RatExpr, v: Var) -> RatExpr:
    """Total derivative, honoring ``s_i**2 = (z_i-A)(z_i-B)``."""
    if v.kind == "S":
        raise ValueError("cannot differentiate with respect to an s generator")
    rel = x.rel
    if x.num.is_zero():
        return x
    if (v.kind == "A" and rel.edge_a is not None) or (v.kind == "B" and rel.edge_b is not None):
        raise ValueError(f"{v} has been substituted in this expression")
    num = x.num
    # atoms whose derivative does not vanish, and the s contributions
    dens: list[tuple[tuple, Poly]] = []
    for atom in sorted(x.atoms):
        d = _atom_derivative(atom, v, rel)
        if d is not None:
            dens.append((atom, d))
    s_parts: list[tuple[int, Poly]] = []
    for i in num.s_indices():
        if _s_derivative_atoms(v, i, rel):
            _, p1 = num.split_s(i)
            s_parts.append((i, p1.mul_mono(_BIT[S(i).slot])))
    rest_d = x.rest.diff_explicit(v) if not x.rest.is_const() else None
    if rest_d is not None and rest_d.is_zero():
        rest_d = None
    # L = product of the (distinct) atoms appearing as 1/atom
    lset: list[tuple] = [a for a, _ in dens]
    for i, _ in s_parts:
        for atom, _c in _s_derivative_atoms(v, i, rel):
            if atom not in lset:
                lset.append(atom)

    def times_l_except(terms: dict, skip: tuple | None) -> dict:
        for atom in lset:
            if atom != skip:
                terms = _atom_mul(terms, atom, rel)
        return terms

    acc: dict = {}

    def accumulate(terms: dict, factor) -> None:
        for m, c in terms.items():
            c = c * factor
            w = acc.get(m)
            acc[m] = c if w is None else w + c

    dn = num.diff_explicit(v)
    if not dn.is_zero():
        accumulate(times_l_except(dn.terms, None), 2)
    for atom, d in dens:
        e = x.atoms[atom]
        t = (num * d).terms if not (d.is_const() and d.const_value() in (1, -1)) else (
            num.terms if d.const_value() == 1 else {m: -c for m, c in num.terms.items()})
        accumulate(times_l_except(t, atom), -2 * e)
    for i, part in s_parts:
        for atom, coef in _s_derivative_atoms(v, i, rel):
            if coef is None:
                # s_i' = s_i * q'/(2q)
                qd = atom_poly(atom, rel).diff_explicit(v)
                accumulate(times_l_except((part * qd).terms, atom), 1)
            else:
                accumulate(times_l_except(part.terms, atom), coef)
    rest = x.rest
    if rest_d is not None:
        # d(N/R) = (N' R - N R')/R**2 on top of the atom part
        body = Poly(_prune(acc), rel) * rest
        corr = Poly(times_l_except(num.terms, None), rel) * rest_d * (-2)
        acc = (body + corr).terms
        rest = rest * rest
    atoms = dict(x.atoms)
    for atom in lset:
        atoms[atom] = atoms.get(atom, 0) + 1
    return expr_normalize(RatExpr(Poly(_prune(acc), rel), x.const * 2, atoms, rest))


def expr_substitute(x: RatExpr, bindings: Mapping[Var, object]) -> RatExpr:
    """Replace parameters (beta, A, B, M_l, J_l) by exact numbers.

    Coefficients become :class:`QuadNum` where needed.  When both edges are
    bound, each pair ``(z_i - a)**p (z_i - b)**q`` in the denominator becomes
    ``(s_i**2)**max(p, q)`` with the numerator compensated.
    """
    for v in bindings:
        if v.kind in ("Z", "S"):
            raise ValueError("z and s generators are never substituted")
    rel = x.rel
    a_val = bindings.get(A, rel.edge_a)
    b_val = bindings.get(B, rel.edge_b)
    a_val = None if a_val is None else _as_quad(a_val)
    b_val = None if b_val is None else _as_quad(b_val)
    new_rel = Relation(a_val, b_val)
    qb = {v: _as_quad(val) for v, val in bindings.items()}
    num = x.num.substitute(qb, new_rel)
    const = x.const
    atoms: dict = {}
    extra_const = QuadNum(1)
    edge_pairs: dict[int, list[int]] = {}
    rest_factors: list[Poly] = []
    for atom, e in x.atoms.items():
        kind = atom[0]
        if kind == "v":
            var = _SLOT_VAR[atom[1]]
            if var in qb:
                extra_const = extra_const * qb[var] ** e
            else:
                atoms[atom] = atoms.get(atom, 0) + e
        elif kind == "l":
            xv, yv = _SLOT_VAR[atom[1]], _SLOT_VAR[atom[2]]
            xb, yb = xv in qb, yv in qb
            if xb and yb:
                extra_const = extra_const * (qb[xv] - qb[yv]) ** e
            elif not xb and not yb:
                atoms[atom] = atoms.get(atom, 0) + e
            elif xv.kind == "Z" and yv in (A, B) and a_val is not None and b_val is not None:
                pair = edge_pairs.setdefault(xv.index, [0, 0])
                pair[0 if yv == A else 1] += e
            else:
                lin = Poly.var(xv, 1, new_rel) - (qb[yv] if yb else Poly.var(yv, 1, new_rel))
                if xb:
                    lin = Poly.var(yv, 1, new_rel) * -1 + qb[xv]
                rest_factors.append(lin**e)
        else:
            atoms[atom] = atoms.get(atom, 0) + e
    for i, (p, q) in sorted(edge_pairs.items()):
        k = max(p, q)
        zi = Poly.var(Z(i), 1, new_rel)
        num = num * (zi - a_val) ** (k - p) * (zi - b_val) ** (k - q)
        atoms[atom_q(i)] = atoms.get(atom_q(i), 0) + k
    if extra_const.is_zero():
        raise ZeroDivisionError("substitution makes the denominator vanish")
    num = num * _simplify(extra_const.inverse())
    rest = x.rest.substitute(qb, new_rel) if not x.rest.is_const() else Poly.const(x.rest.const_value(), new_rel)
    for f in rest_factors:
        rest = rest * f
    if rest.is_zero():
        raise ZeroDivisionError("substitution makes the denominator vanish")
    return expr_normalize(RatExpr(num, const, atoms, rest))


def _as_quad(v) -> QuadNum:
    return v if isinstance(v, QuadNum) else QuadNum(v)


# ----------------------------------------------------------------------------
# convenience builders
# ----------------------------------------------------------------------------


def pvar(v: Var, rel: Relation = GENERIC) -> Poly:
    return Poly.var(v, 1, rel)


def evar(v: Var, rel: Relation = GENERIC) -> RatExpr:
    return RatExpr.var(v, rel)


def econst(c, rel: Relation = GENERIC) -> RatExpr:
    return RatExpr.const_expr(c, rel)


def product(items: Iterable, start):
    acc = start
    for it in items:
        acc = acc * it
    return acc
