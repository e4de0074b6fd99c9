import itertools

import pytest

from explicit_forms import EXPLICIT, F4, F4_BRACKET, parse_bracket
from tdm.exactnum import QuadNum
from tdm.symcore import BETA, RatExpr, S, Z, expr_equal
from tdm.wsmodel import (
    PotentialSpec,
    beta_free,
    flip_branch,
    g_one,
    gen_F,
    model_coordinate,
    model_edges,
    model_point,
    mp_density_params,
    specialize,
)

from fractions import Fraction


def test_edges():
    a, b = model_edges()
    assert a + b == 6 and a * b == 1
    assert (a, b) == mp_density_params()
    assert a == QuadNum(3, -2)


def test_model_coordinates():
    assert model_coordinate("M", 0) == 0 and model_coordinate("J", 0) == 0
    assert model_coordinate("M", 1) == -QuadNum(3, 2) / 2
    assert model_coordinate("J", 1) == -QuadNum(3, -2) / 2
    for ell in range(1, 8):
        a, b = model_edges()
        assert model_coordinate("M", ell) == QuadNum((-1) ** ell) / (2 * a**ell)
        assert model_coordinate("J", ell) == QuadNum((-1) ** ell) / (2 * b**ell)
    with pytest.raises(ValueError):
        model_coordinate("X", 1)


def test_potential():
    pot = PotentialSpec()
    assert pot.derivative(Fraction(1)) == 0
    assert pot.derivative(Fraction(2)) == Fraction(1, 4)


def test_model_point_contents():
    pt = model_point(3)
    assert len(pt) == 2 + 2 * 3


def test_g_one_and_F1():
    z, s = RatExpr.var(Z(1), g_one().rel), RatExpr.var(S(1), g_one().rel)
    assert expr_equal(g_one(), (z - 1 - s) / (2 * z))
    assert expr_equal(gen_F(1), (3 - z - s) / 2)


@pytest.mark.parametrize("v", [1, 2, 3, 4])
def test_explicit_forms(v):
    assert expr_equal(gen_F(v), EXPLICIT[v]())


def test_F4_bracket_constant_term():
    coeffs = parse_bracket(F4_BRACKET)
    assert coeffs[(0, 0, 0, 0)] == 159
    assert coeffs[(1, 0, 0, 0)] == -675
    assert all(sum(p) <= 3 for p in coeffs)


def test_F4_detects_single_coefficient_change():
    coeffs = parse_bracket(F4_BRACKET)
    coeffs[(0, 0, 0, 0)] += 1
    assert not expr_equal(gen_F(4), F4(coeffs))


def test_specialize3_prefactor():
    g = specialize(3)
    rel = g.rel
    e3 = RatExpr.var(Z(1), rel) * RatExpr.var(Z(2), rel) * RatExpr.var(Z(3), rel)
    # resolvent branch: flip every s to compare with the principal-branch form
    lhs = flip_branch(g * (-e3), [1, 2, 3])
    assert expr_equal(lhs, EXPLICIT[3]())


def test_branch_flip_is_involution():
    g = specialize(3)
    assert expr_equal(flip_branch(flip_branch(g, [1, 2]), [1, 2]), g)


@pytest.mark.parametrize("v", [2, 3, 4, 5])
def test_beta_free(v):
    f = beta_free(v, gen_F(v))
    assert BETA not in f.variables()


def test_beta_residue_detected():
    with pytest.raises(ArithmeticError):
        beta_free(3, gen_F(2))


@pytest.mark.parametrize("v", [2, 3, 4])
def test_F_over_ev_is_symmetric(v):
    f = gen_F(v)
    for i, j in itertools.combinations(range(1, v + 1), 2):
        swap = {Z(i): Z(j), Z(j): Z(i), S(i): S(j), S(j): S(i)}
        assert expr_equal(f.rename(swap), f)


def test_F_has_no_surd_coefficients():
    for v in (1, 2, 3, 4):
        for c in gen_F(v).num.terms.values():
            assert not isinstance(c, QuadNum) or c.is_rational()


def test_gen_F_rejects_zero():
    with pytest.raises(ValueError):
        gen_F(0)
