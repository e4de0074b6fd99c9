"""Truncated power series over Q(sqrt 2) and cumulant extraction.

A :class:`Series` is a dense box of coefficients (a numpy object array holding
Python ints, Fractions or :class:`QuadNum`), truncated per variable.  The
extraction pipeline expands ``beta**(v-1) F_{v,0}`` on the principal branch of
each ``s_i`` and reads off ``alpha[k_1, ..., k_v]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .exactnum import QuadNum
from .symcore import BETA, S, Z, RatExpr, _SLOT_VAR, atom_var, mono_exponent
from .wsmodel import beta_free, gen_F

__all__ = [
    "Series",
    "CumulantRecord",
    "IntegralityError",
    "BetaResidueError",
    "NonDivisibleError",
    "UnsupportedDenominatorError",
    "legendre_value",
    "legendre_binomial",
    "q_power_coeffs",
    "s_power_series",
    "series_arith",
    "series_inverse",
    "divide_by_diff_square",
    "division_caps",
    "expand_expr",
    "extract_alpha",
    "SOURCES",
]

SOURCES = ("ENGINE", "CLOSED_FORM", "TABLE")


class IntegralityError(ArithmeticError):
    """An extracted coefficient is not a sqrt(2)-free integer."""


class BetaResidueError(ArithmeticError):
    """``beta**(v-1) F_{v,0}`` still depends on beta."""


class NonDivisibleError(ArithmeticError):
    """A series is not divisible by ``(z_i - z_j)**2`` within its caps."""


class UnsupportedDenominatorError(ValueError):
    """The expression has a denominator factor the expander does not handle."""


# ----------------------------------------------------------------------------
# univariate building blocks
# ----------------------------------------------------------------------------


def legendre_binomial(ell: int) -> int:
    """``P_l(3) = sum_p C(l, p)**2 2**p``."""
    return sum(comb(ell, p) ** 2 * 2**p for p in range(ell + 1))


@lru_cache(maxsize=None)
def _legendre_table(n: int) -> tuple[int, ...]:
    vals = [1, 3]
    for ell in range(1, n):
        nxt = Fraction(3 * (2 * ell + 1) * vals[ell] - ell * vals[ell - 1], ell + 1)
        if nxt.denominator != 1:
            raise ArithmeticError("Legendre recurrence left the integers")
        vals.append(int(nxt))
    return tuple(vals[: n + 1])


def legendre_value(ell: int) -> int:
    """``P_l(3)`` from ``(l+1) P_{l+1} = 3(2l+1) P_l - l P_{l-1}``."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    return _legendre_table(max(ell, 1))[ell]


def _umul(x: Sequence, y: Sequence, n: int) -> list:
    out = [0] * (n + 1)
    for i, a in enumerate(x[: n + 1]):
        if a == 0:
            continue
        for j, b in enumerate(y[: n + 1 - i]):
            out[i + j] += a * b
    return out


@lru_cache(maxsize=None)
def q_power_coeffs(h: int, n: int) -> tuple[int, ...]:
    """First ``n+1`` coefficients of ``(1 - 6z + z**2)**(h/2)``, principal branch.

    ``h = -1`` is the Legendre generating function at ``t = 3``; every other
    power is a product of that series and of the quadratic itself
    (``q**(-1) = P**2``).
    """
    base = [legendre_value(k) for k in range(n + 1)]
    q = [1, -6, 1][: n + 1]
    out: list = [1] + [0] * n
    if h >= 0:
        for _ in range(h // 2 + h % 2):
            out = _umul(out, q, n)
        if h % 2:
            out = _umul(out, base, n)
    else:
        for _ in range(-h):
            out = _umul(out, base, n)
    return tuple(out)


# ----------------------------------------------------------------------------
# Series
# ----------------------------------------------------------------------------


def _zeros(shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr.fill(0)
    return arr


def _is_zero(c) -> bool:
    return c == 0


class Series:
    """Truncated multivariate power series with per-variable degree caps.

    >>> x = Series.monomial((1,), 1, (2,))
    >>> ((Series.const(1, (2,)) + x) * (Series.const(1, (2,)) - x))[(2,)]
    -1
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray):
        if coeffs.dtype != object:
            raise TypeError("Series coefficients must be an object array")
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------
    @classmethod
    def zeros(cls, caps: Sequence[int]) -> "Series":
        return cls(_zeros(tuple(c + 1 for c in caps)))

    @classmethod
    def const(cls, c, caps: Sequence[int]) -> "Series":
        s = cls.zeros(caps)
        s.coeffs[(0,) * len(caps)] = c
        return s

    @classmethod
    def monomial(cls, exps: Sequence[int], c, caps: Sequence[int]) -> "Series":
        s = cls.zeros(caps)
        if all(e <= k for e, k in zip(exps, caps)):
            s.coeffs[tuple(exps)] = c
        return s

    @classmethod
    def univariate(cls, axis: int, coeffs: Sequence, caps: Sequence[int]) -> "Series":
        s = cls.zeros(caps)
        idx = [0] * len(caps)
        for k in range(min(len(coeffs), caps[axis] + 1)):
            idx[axis] = k
            s.coeffs[tuple(idx)] = coeffs[k]
        return s

    # -- views ------------------------------------------------------------------
    @property
    def caps(self) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.coeffs.shape)

    @property
    def nvars(self) -> int:
        return self.coeffs.ndim

    def __getitem__(self, exps) -> object:
        return self.coeffs[tuple(exps)]

    def items(self) -> Iterable[tuple[tuple[int, ...], object]]:
        """Nonzero ``(exponents, coefficient)`` pairs in lexicographic order."""
        for idx in itertools.product(*(range(n) for n in self.coeffs.shape)):
            c = self.coeffs[idx]
            if not _is_zero(c):
                yield idx, c

    def truncate(self, caps: Sequence[int]) -> "Series":
        if any(c > k for c, k in zip(caps, self.caps)):
            raise ValueError(f"cannot widen caps {self.caps} to {tuple(caps)}")
        return Series(self.coeffs[tuple(slice(0, c + 1) for c in caps)].copy())

    def map(self, fn) -> "Series":
        out = _zeros(self.coeffs.shape)
        for idx, c in self.items():
            out[idx] = fn(c)
        return Series(out)

    # -- arithmetic -------------------------------------------------------------
    def _check(self, other: "Series") -> None:
        if self.caps != other.caps:
            raise ValueError(f"cap mismatch: {self.caps} vs {other.caps}")

    def __add__(self, other):
        if isinstance(other, Series):
            self._check(other)
            return Series(self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[(0,) * self.nvars] = out[(0,) * self.nvars] + other
        return Series(out)

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Series):
            return series_arith("mul", self, other)
        if _is_zero(other):
            return Series.zeros(self.caps)
        return Series(self.coeffs * other)

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other):
        if not isinstance(other, Series) or self.caps != other.caps:
            return NotImplemented
        return all(_is_zero(c) for c in (self.coeffs - other.coeffs).flat)

    __hash__ = None

    def mul_univariate(self, axis: int, coeffs: Sequence) -> "Series":
        """Multiply by a series in the single variable ``axis``."""
        n = self.coeffs.shape[axis]
        out = _zeros(self.coeffs.shape)
        for k in range(min(n, len(coeffs))):
            ck = coeffs[k]
            if _is_zero(ck):
                continue
            dst = [slice(None)] * self.nvars
            src = [slice(None)] * self.nvars
            dst[axis] = slice(k, n)
            src[axis] = slice(0, n - k)
            out[tuple(dst)] += self.coeffs[tuple(src)] * ck
        return Series(out)

    def __repr__(self):
        terms = ", ".join(f"{idx}: {c}" for idx, c in self.items())
        return f"Series(caps={self.caps}, {{{terms}}})"


def series_arith(op: str, x: Series, y: Series) -> Series:
    """``op`` in {"add", "sub", "mul"} on series with identical caps."""
    x._check(y)
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op != "mul":
        raise ValueError(f"unknown op {op!r}")
    shape = x.coeffs.shape
    if sum(1 for _ in y.items()) < sum(1 for _ in x.items()):
        x, y = y, x
    out = _zeros(shape)
    for idx, c in x.items():
        dst = tuple(slice(i, n) for i, n in zip(idx, shape))
        src = tuple(slice(0, n - i) for i, n in zip(idx, shape))
        out[dst] += y.coeffs[src] * c
    return Series(out)


def series_inverse(x: Series) -> Series:
    """Multiplicative inverse up to the caps; requires a nonzero constant term."""
    c0 = x.coeffs[(0,) * x.nvars]
    if _is_zero(c0):
        raise ZeroDivisionError("series has zero constant term")
    inv0 = Fraction(1) / c0 if not isinstance(c0, QuadNum) else c0.inverse()
    if isinstance(inv0, Fraction) and inv0.denominator == 1:
        inv0 = inv0.numerator
    y = Series.const(1, x.caps) - x * inv0  # no constant term
    total = Series.const(1, x.caps)
    power = Series.const(1, x.caps)
    for _ in range(sum(x.caps)):
        power = power * y
        if all(_is_zero(c) for c in power.coeffs.flat):
            break
        total = total + power
    return total * inv0


def s_power_series(i: int, halfexp: int, caps: Sequence[int]) -> Series:
    """``(z_i**2 - 6 z_i + 1)**(halfexp/2)`` on the principal branch (variables 1-based)."""
    if halfexp % 2 == 0:
        raise ValueError("halfexp must be odd")
    axis = i - 1
    return Series.univariate(axis, q_power_coeffs(halfexp, caps[axis]), caps)


# ----------------------------------------------------------------------------
# division by (z_i - z_j)**2
# ----------------------------------------------------------------------------


def division_caps(caps: Sequence[int], i: int, j: int) -> tuple[int, ...]:
    """Caps an input must have so that dividing by ``(z_i - z_j)**2`` is exact up to ``caps``.

    A quotient coefficient on the anti-diagonal ``a + b = n`` depends on input
    coefficients with degree up to ``n + 2`` in one of the two variables, so
    both axes need ``caps[i] + caps[j] + 2``.
    """
    out = list(caps)
    need = caps[i - 1] + caps[j - 1] + 2
    out[i - 1] = out[j - 1] = need
    return tuple(out)


def _divide_linear(f: np.ndarray, ai: int, aj: int) -> np.ndarray:
    """Quotient of ``f`` by ``(z_i - z_j)`` on the box where it is determined.

    ``q[a, b] = sum_{k=0..b} f[a+1+k, b-k]``; the output keeps ``a + b + 1 <= cap_i``
    and ``b <= cap_j``.  Entries not determined by the input are left zero and
    discarded by the caller.
    """
    ci, cj = f.shape[ai] - 1, f.shape[aj] - 1
    # divisibility: f(z, z) = 0 on every fully available anti-diagonal
    for n in range(0, min(ci, cj) + 1):
        acc = 0
        for a in range(n + 1):
            acc = acc + _take(f, ai, aj, a, n - a)
        if not _all_zero(acc):
            raise NonDivisibleError(f"residual on anti-diagonal {n} of (z_{ai + 1} - z_{aj + 1})")
    q = _zeros(f.shape)
    for a in range(ci):
        for b in range(min(cj, ci - 1 - a) + 1):
            acc = 0
            for k in range(b + 1):
                acc = acc + _take(f, ai, aj, a + 1 + k, b - k)
            _put(q, ai, aj, a, b, acc)
    return q


def _take(arr: np.ndarray, ai: int, aj: int, a: int, b: int):
    idx = [slice(None)] * arr.ndim
    idx[ai], idx[aj] = a, b
    return arr[tuple(idx)]


def _put(arr: np.ndarray, ai: int, aj: int, a: int, b: int, val) -> None:
    idx = [slice(None)] * arr.ndim
    idx[ai], idx[aj] = a, b
    arr[tuple(idx)] = val


def _all_zero(x) -> bool:
    if isinstance(x, np.ndarray):
        return all(_is_zero(c) for c in x.flat)
    return _is_zero(x)


def divide_by_diff_square(x: Series, i: int, j: int, caps: Sequence[int] | None = None) -> Series:
    """Exact quotient ``x / (z_i - z_j)**2`` (variables 1-based).

    ``caps`` are the requested output caps (by default the top two degrees in
    ``z_i`` and ``z_j`` are dropped).  A quotient coefficient is determined by
    the input only when its total degree in ``z_i, z_j`` is at most
    ``x.caps[i] - 2``; larger requests raise ``ValueError``.
    Raises :class:`NonDivisibleError` if ``x`` vanishes to less than second
    order on ``z_i = z_j`` within its caps.
    """
    ai, aj = i - 1, j - 1
    if caps is None:
        caps = list(x.caps)
        caps[ai] -= 2
        caps[aj] -= 2
    caps = tuple(caps)
    if min(caps) < 0:
        raise ValueError("caps too small for the division guard band")
    if caps[ai] + caps[aj] + 2 > x.caps[ai]:
        raise ValueError(
            f"input caps {x.caps} do not determine the quotient up to {caps}; "
            f"expand to {division_caps(caps, i, j)}"
        )
    q1 = _divide_linear(x.coeffs, ai, aj)
    q2 = _divide_linear(q1[_shrink(q1.ndim, ai, x.caps[ai] - 1)], ai, aj)
    return Series(q2[tuple(slice(0, c + 1) for c in caps)].copy())


def _shrink(ndim: int, axis: int, cap: int) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = slice(0, cap + 1)
    return tuple(idx)


# ----------------------------------------------------------------------------
# expansion of specialized expressions
# ----------------------------------------------------------------------------


def _diff_atom_indices(atom: tuple) -> tuple[int, int] | None:
    if atom[0] != "l":
        return None
    x, y = _SLOT_VAR[atom[1]], _SLOT_VAR[atom[2]]
    if x.kind == "Z" and y.kind == "Z":
        return min(x.index, y.index), max(x.index, y.index)
    return None


def expand_expr(x: RatExpr, caps: Sequence[int]) -> Series:
    """Power series of a model-point expression on the principal branch.

    The denominator may contain the constant, powers of ``z_i**2 - 6 z_i + 1``
    and at most one ``(z_i - z_j)**2``.  Variables beyond ``len(caps)`` must not
    occur.
    """
    caps = tuple(caps)
    nv = len(caps)
    rel = x.rel
    if rel.edge_a is None or rel.edge_b is None:
        raise UnsupportedDenominatorError("expression is not specialized to the model edges")
    qpow = [0] * nv
    diff = None
    for atom, e in x.atoms.items():
        if atom[0] == "q":
            if atom[1] > nv:
                raise UnsupportedDenominatorError(f"variable z_{atom[1]} outside caps")
            qpow[atom[1] - 1] += e
            continue
        pair = _diff_atom_indices(atom)
        if pair is not None and e <= 2 and diff is None:
            diff = (pair, e)
            continue
        if atom == atom_var(BETA):
            raise BetaResidueError("beta left in the denominator")
        raise UnsupportedDenominatorError(f"cannot expand denominator factor {atom} ** {e}")
    if not x.rest.is_const():
        raise UnsupportedDenominatorError(f"unfactored denominator {x.rest}")
    work_caps = caps if diff is None else division_caps(caps, *diff[0])
    z_slots = [Z(i).slot for i in range(1, nv + 1)]
    s_slots = [S(i).slot for i in range(1, nv + 1)]
    groups: dict[tuple, np.ndarray] = {}
    for m, c in x.num.terms.items():
        for v in _vars_in(m):
            if v.kind not in ("Z", "S") or v.index > nv:
                if v == BETA:
                    raise BetaResidueError("beta left in the numerator")
                raise UnsupportedDenominatorError(f"numerator depends on {v}")
        pattern = tuple(mono_exponent(m, s) for s in s_slots)
        exps = tuple(mono_exponent(m, zs) for zs in z_slots)
        if any(e > k for e, k in zip(exps, work_caps)):
            continue
        arr = groups.get(pattern)
        if arr is None:
            arr = groups[pattern] = _zeros(tuple(k + 1 for k in work_caps))
        arr[exps] = arr[exps] + c
    total = Series.zeros(work_caps)
    for pattern, arr in sorted(groups.items()):
        s = Series(arr)
        for axis in range(nv):
            h = pattern[axis] - 2 * qpow[axis]
            if h != 0:
                s = s.mul_univariate(axis, q_power_coeffs(h, work_caps[axis]))
        total = total + s
    if diff is not None:
        (i, j), e = diff
        if e == 2:
            total = divide_by_diff_square(total, i, j, caps)
        else:
            q = _divide_linear(total.coeffs, i - 1, j - 1)
            total = Series(q[tuple(slice(0, c + 1) for c in caps)].copy())
    if x.const != 1:
        inv = x.const.inverse() if isinstance(x.const, QuadNum) else Fraction(1) / x.const
        total = total.map(lambda c: _clean(c * inv))
    return total


def _vars_in(m: int):
    from .symcore import mono_items

    return [v for v, _ in mono_items(m)]


def _clean(c):
    if isinstance(c, QuadNum) and c.is_rational():
        c = c.rat
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


# ----------------------------------------------------------------------------
# cumulant records
# ----------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class CumulantRecord:
    """``alpha[kappa]`` with provenance; ``source`` is one of :data:`SOURCES`."""

    v: int
    kappa: tuple[int, ...]
    alpha: int
    source: str = "ENGINE"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if len(self.kappa) != self.v:
            raise ValueError("kappa length must equal v")
        if not isinstance(self.alpha, int) or isinstance(self.alpha, bool):
            raise IntegralityError(f"alpha{list(self.kappa)} = {self.alpha!r} is not an integer")

    @classmethod
    def from_coefficient(cls, v: int, kappa: tuple[int, ...], c, source: str = "ENGINE") -> "CumulantRecord":
        """Build a record from an exact series coefficient, asserting integrality."""
        raw = c
        if isinstance(c, QuadNum):
            if not c.is_rational():
                raise IntegralityError(f"alpha{list(kappa)} has a sqrt(2) part: {raw}")
            c = c.rat
        if isinstance(c, Fraction):
            if c.denominator != 1:
                raise IntegralityError(f"alpha{list(kappa)} = {raw} is not an integer")
            c = c.numerator
        if not isinstance(c, int):
            raise IntegralityError(f"alpha{list(kappa)} = {raw!r} is not exact")
        return cls(v, tuple(kappa), c, source)


def extract_alpha(v: int, kmax: int, cache=None, kmin: int = 1) -> list[CumulantRecord]:
    """Engine values of ``alpha[kappa]`` for ``kmin <= kappa_i <= kmax``, sorted by kappa."""
    if v < 1 or kmax < 1:
        raise ValueError("need v >= 1 and kmax >= 1")
    f = gen_F(v, cache)
    try:
        f = beta_free(v, f)
    except ArithmeticError as exc:
        raise BetaResidueError(str(exc)) from exc
    series = expand_expr(f, (kmax,) * v)
    out = []
    for kappa in itertools.product(range(kmin, kmax + 1), repeat=v):
        out.append(CumulantRecord.from_coefficient(v, kappa, series[kappa]))
    return out
