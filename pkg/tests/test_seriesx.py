import itertools
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdm.exactnum import QuadNum
from tdm.seriesx import (
    BetaResidueError,
    CumulantRecord,
    IntegralityError,
    NonDivisibleError,
    Series,
    divide_by_diff_square,
    division_caps,
    expand_expr,
    extract_alpha,
    legendre_binomial,
    legendre_value,
    q_power_coeffs,
    s_power_series,
    series_arith,
    series_inverse,
)
from tdm.symcore import BETA, RatExpr
from tdm.wsmodel import beta_free, gen_F


def coeffs(x: Series, axis_len=None):
    return [x[(k,)] for k in range(x.caps[0] + 1)]


def test_legendre_values():
    assert [legendre_value(k) for k in range(4)] == [1, 3, 13, 63]
    assert all(legendre_value(k) == legendre_binomial(k) for k in range(21))
    assert legendre_binomial(2) == 1 + 8 + 4


def test_s_power_series_examples():
    assert coeffs(s_power_series(1, -1, (3,))) == [1, 3, 13, 63]
    assert coeffs(s_power_series(1, 1, (4,))) == [1, -3, -4, -12, -44]
    with pytest.raises(ValueError):
        s_power_series(1, 2, (3,))


def test_branch_self_consistency():
    caps = (12,)
    plus, minus = s_power_series(1, 1, caps), s_power_series(1, -1, caps)
    assert plus * minus == Series.const(1, caps)
    quad = Series.univariate(0, [1, -6, 1], caps)
    assert plus * plus == quad


def test_nonnegative_integer_powers():
    for n in range(1, 11):
        c = q_power_coeffs(-n, 15)
        assert all(isinstance(x, int) and x >= 0 for x in c)


def test_series_arith_examples():
    caps = (2,)
    x = Series.univariate(0, [1, 1], caps)
    one = Series.const(1, caps)
    assert series_arith("mul", x, one) == x
    y = Series.univariate(0, [1, -1], caps)
    assert coeffs(series_arith("mul", x, y)) == [1, 0, -1]
    with pytest.raises(ValueError):
        series_arith("mul", x, Series.const(1, (3,)))


def test_series_inverse_examples():
    assert coeffs(series_inverse(Series.univariate(0, [1, -1], (3,)))) == [1, 1, 1, 1]
    assert coeffs(series_inverse(Series.const(1, (3,)))) == [1, 0, 0, 0]
    assert coeffs(series_inverse(Series.univariate(0, [1, -6, 1], (2,)))) == [1, 6, 35]
    with pytest.raises(ZeroDivisionError):
        series_inverse(Series.univariate(0, [0, 1], (2,)))


def _diff_square_times(poly: dict, caps):
    out = Series.zeros(caps)
    d = {(2, 0): 1, (1, 1): -2, (0, 2): 1}
    for (i, j), c in poly.items():
        for (p, q), e in d.items():
            if i + p <= caps[0] and j + q <= caps[1]:
                out = out + Series.monomial((i + p, j + q), c * e, caps)
    return out


def test_divide_exact():
    caps = (6, 6)
    x = _diff_square_times({(0, 0): 1, (1, 0): 1}, caps)
    q = divide_by_diff_square(x, 1, 2, (2, 2))
    assert q[(0, 0)] == 1 and q[(1, 0)] == 1
    assert all(q[k] == 0 for k in itertools.product(range(3), repeat=2) if k not in ((0, 0), (1, 0)))


def test_divide_non_divisible():
    x = Series.monomial((1, 0), 1, (6, 6))
    with pytest.raises(NonDivisibleError):
        divide_by_diff_square(x, 1, 2, (2, 2))


def test_divide_needs_guard_band():
    x = _diff_square_times({(0, 0): 1}, (4, 4))
    with pytest.raises(ValueError):
        divide_by_diff_square(x, 1, 2, (2, 2))
    assert division_caps((2, 2), 1, 2) == (6, 6)


@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), st.integers(-9, 9), max_size=6))
def test_divide_roundtrip(poly):
    caps = division_caps((3, 3), 1, 2)
    x = _diff_square_times(poly, caps)
    q = divide_by_diff_square(x, 1, 2, (3, 3))
    for k in itertools.product(range(4), repeat=2):
        assert q[k] == poly.get(k, 0)


def test_F2_bracket_through_division():
    # z1 z2 [..]/(z1-z2)^2 at beta=1 reproduces alpha[1,1] = 4 and alpha[1,2] = 24
    f = beta_free(2, gen_F(2))
    s = expand_expr(f, (2, 2))
    assert s[(1, 1)] == 4 and s[(1, 2)] == 24


def test_expand_F1():
    s = expand_expr(gen_F(1), (5,))
    assert coeffs(s) == [1, 1, 2, 6, 22, 90]


def test_expand_F3():
    s = expand_expr(beta_free(3, gen_F(3)), (1, 1, 1))
    assert s[(1, 1, 1)] == 96


def test_expand_constant():
    s = expand_expr(RatExpr.const_expr(Fraction(7, 3), gen_F(1).rel), (2, 2))
    assert s[(0, 0)] == Fraction(7, 3) and s[(1, 1)] == 0


def test_expand_rejects_beta():
    with pytest.raises(BetaResidueError):
        expand_expr(gen_F(2), (2, 2))


def test_extract_examples():
    r1 = {r.kappa: r.alpha for r in extract_alpha(1, 3)}
    assert r1 == {(1,): 1, (2,): 2, (3,): 6}
    r2 = {r.kappa: r.alpha for r in extract_alpha(2, 3)}
    assert r2[(2, 2)] == 160 and r2[(3, 3)] == 5700
    r5 = extract_alpha(5, 1)
    assert len(r5) == 1 and r5[0].alpha == 437760


def test_extract_sorted_and_symmetric():
    recs = extract_alpha(3, 3)
    assert [r.kappa for r in recs] == sorted(r.kappa for r in recs)
    box = {r.kappa: r.alpha for r in recs}
    for k, a in box.items():
        for p in itertools.permutations(k):
            assert box[p] == a


def test_zero_index_rule():
    s = expand_expr(beta_free(3, gen_F(3)), (3, 3, 3))
    for k in itertools.product(range(4), repeat=3):
        if 0 in k:
            assert s[k] == 0


def test_record_integrality():
    assert CumulantRecord.from_coefficient(2, (1, 1), QuadNum(4)).alpha == 4
    with pytest.raises(IntegralityError):
        CumulantRecord.from_coefficient(2, (1, 1), QuadNum(4, 1))
    with pytest.raises(IntegralityError):
        CumulantRecord.from_coefficient(2, (1, 1), Fraction(9, 2))
    with pytest.raises(ValueError):
        CumulantRecord(2, (1,), 3)
    with pytest.raises(ValueError):
        CumulantRecord(1, (1,), 3, "GUESS")


def test_extract_rejects_bad_arguments():
    with pytest.raises(ValueError):
        extract_alpha(0, 3)
