"""Specialization of the one-cut recursion to the inverse delay times.

The inverse delay times follow the Laguerre-type weight with potential
``V(x) = (x - log x) / 2``.  Its equilibrium measure is the Marchenko-Pastur
law on ``[a, b]`` with ``a = 3 - 2 sqrt 2`` and ``b = 3 + 2 sqrt 2``; the
coordinates ``M_l, J_l`` take the closed values ``m_l, j_l`` returned by
:func:`model_coordinate`.

Branch bookkeeping
------------------
Inside the recursion ``s_i`` is the resolvent branch of
``sqrt((z_i - A)(z_i - B))`` (``s_i ~ z_i`` at infinity, hence ``s_i = -1`` at
``z_i = 0`` for the model edges).  Coefficient extraction uses the principal
branch at the origin (``s_i(0) = +1``).  :func:`gen_F` converts between the two
by ``s_i -> -s_i``, so every expression it returns is meant to be expanded with
the principal branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exactnum import QuadNum
from .looprec import DEFAULT_VMAX, GreenCache, PointGreenCache
from .symcore import (
    BETA,
    A,
    B,
    J,
    M,
    S,
    Z,
    Poly,
    RatExpr,
    Relation,
    Var,
    _BIT,
    atom_var,
    evar,
    expr_normalize,
    expr_substitute,
)

__all__ = [
    "PotentialSpec",
    "ModelPoint",
    "model_edges",
    "model_coordinate",
    "model_point",
    "model_relation",
    "g_one",
    "specialize",
    "flip_branch",
    "gen_F",
    "mp_density_params",
    "default_point_cache",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Couplings ``t_k`` of ``V(x) = t_0 log x + t_1 x``; here ``V = (x - log x)/2``."""

    t0: Fraction = Fraction(-1, 2)
    t1: Fraction = Fraction(1, 2)

    def value(self, x: float) -> float:
        return float(self.t0) * math.log(x) + float(self.t1) * x

    def derivative(self, x):
        """``V'(x) = t_1 + t_0 / x``, i.e. ``(x - 1) / (2x)``; works for complex input."""
        return float(self.t1) + float(self.t0) / x


def model_edges() -> tuple[QuadNum, QuadNum]:
    """Edges ``(a, b) = (3 - 2 sqrt 2, 3 + 2 sqrt 2)`` of the Marchenko-Pastur support."""
    return QuadNum(3, -2), QuadNum(3, 2)


def model_coordinate(kind: str, ell: int) -> QuadNum:
    """Closed-form ``m_l`` (kind ``"M"``) or ``j_l`` (kind ``"J"``).

    ``m_l = (-1)**l / (2 a**l)`` and ``j_l = (-1)**l / (2 b**l)`` for ``l >= 1``;
    both vanish at ``l = 0``.
    """
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if kind not in ("M", "J"):
        raise ValueError(f"kind must be 'M' or 'J', got {kind!r}")
    if ell == 0:
        return QuadNum(0)
    a, b = model_edges()
    edge = a if kind == "M" else b
    return QuadNum((-1) ** ell) / (edge**ell * 2)


@dataclass(frozen=True)
class ModelPoint:
    a: QuadNum
    b: QuadNum
    m: tuple[QuadNum, ...]
    j: tuple[QuadNum, ...]

    @classmethod
    def build(cls, ell_max: int) -> "ModelPoint":
        a, b = model_edges()
        m = tuple(model_coordinate("M", ell) for ell in range(ell_max + 1))
        j = tuple(model_coordinate("J", ell) for ell in range(ell_max + 1))
        return cls(a, b, m, j)

    def bindings(self) -> dict[Var, QuadNum]:
        out: dict[Var, QuadNum] = {A: self.a, B: self.b}
        for ell in range(1, len(self.m)):
            out[M(ell)] = self.m[ell]
            out[J(ell)] = self.j[ell]
        return out


def model_point(ell_max: int = DEFAULT_VMAX) -> dict[Var, QuadNum]:
    """Bindings ``A=a, B=b, M_l=m_l, J_l=j_l`` for ``1 <= l <= ell_max``."""
    return ModelPoint.build(ell_max).bindings()


def model_relation() -> Relation:
    """``s_i**2 = z_i**2 - 6 z_i + 1``."""
    a, b = model_edges()
    return Relation(a, b)


def g_one() -> RatExpr:
    """``g_{1,0}(z_1) = (z_1 - 1 - s_1) / (2 z_1)`` on the resolvent branch of ``s_1``."""
    rel = model_relation()
    z = evar(Z(1), rel)
    s = evar(S(1), rel)
    return (z - 1 - s) / (z * 2)


_POINT_CACHE: PointGreenCache | None = None


def default_point_cache(vmax: int = DEFAULT_VMAX) -> PointGreenCache:
    """Process-wide cache of specialized ``g_{v,0}`` (built lazily, reused)."""
    global _POINT_CACHE
    if _POINT_CACHE is None or _POINT_CACHE.vmax < vmax:
        _POINT_CACHE = PointGreenCache(model_point(vmax), vmax)
    return _POINT_CACHE


def specialize(v: int, cache: GreenCache | PointGreenCache | None = None) -> RatExpr:
    """``g_{v,0}``: ``G_{v,0}`` at ``A=a, B=b, M_l=m_l, J_l=j_l`` with ``beta`` symbolic.

    With a :class:`GreenCache` the symbolic ``G_{v,0}`` is built first and then
    substituted.  Otherwise (the default) the point engine is used, which gives
    the identical expression at a fraction of the cost.
    """
    if v < 2:
        raise ValueError("specialize needs v >= 2; use g_one() for v = 1")
    if isinstance(cache, GreenCache):
        return expr_substitute(cache.get(v), model_point(max(v, 1)))
    if cache is None:
        cache = default_point_cache(max(v, DEFAULT_VMAX))
    return cache.get(v)


def flip_branch(x: RatExpr, indices) -> RatExpr:
    """Replace ``s_i`` by ``-s_i`` for every ``i`` in ``indices``.

    Denominators only hold ``s_i**2``, so only the numerator changes sign on
    terms that carry an odd power of ``s_i``.
    """
    mask = 0
    for i in indices:
        mask |= _BIT[S(i).slot]
    if not mask:
        return x
    terms = {}
    for m, c in x.num.terms.items():
        odd = bin(m & mask).count("1") % 2
        terms[m] = -c if odd else c
    return RatExpr(Poly(terms, x.rel), x.const, x.atoms, x.rest)


def gen_F(v: int, cache: GreenCache | PointGreenCache | None = None) -> RatExpr:
    """Generating function ``F_{v,0}`` of the limiting cumulants.

    ``F_{v,0} = (-1)**v z_1...z_v g_{v,0} + [v = 1]``, with ``g_{v,0}`` on the
    resolvent branch, rewritten on the principal branch of every ``s_i``.  The
    ``[v = 1]`` term is ``alpha[0] = 1``: ``-z g_{1,0}`` is the generating
    function of the negative moments and misses the constant.
    """
    if v < 1:
        raise ValueError("v must be >= 1")
    rel = model_relation()
    g = g_one() if v == 1 else specialize(v, cache)
    ev = RatExpr(Poly({sum(_BIT[Z(i).slot] for i in range(1, v + 1)): (-1) ** v}, rel))
    f = flip_branch(ev * g, range(1, v + 1))
    if v == 1:
        f = f + 1
    return expr_normalize(f)


def beta_free(v: int, f: RatExpr) -> RatExpr:
    """``beta**(v-1) * f``; raises if a ``beta`` residue survives."""
    rel = f.rel
    bexp = f.atoms.get(atom_var(BETA), 0)
    out = f * RatExpr(Poly({_BIT[BETA.slot] * (v - 1): 1} if v > 1 else {0: 1}, rel))
    if BETA in out.variables():
        raise ArithmeticError(f"beta residue in beta^{v - 1} F_{v},0 (denominator exponent was {bexp})")
    return out


def mp_density_params() -> tuple[QuadNum, QuadNum]:
    """Support ``[a, b]`` of ``rho(x) = sqrt((x - a)(b - x)) / (2 pi x)``."""
    return model_edges()
