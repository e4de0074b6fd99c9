import math

import numpy as np
import pytest
from scipy.integrate import quad

from tdm.oracle.closed import schroder
from tdm.oracle.derivatives import verify_parameter_derivatives
from tdm.oracle.quadrature import (
    DEFAULT_CONTOUR,
    ContourError,
    Ellipse,
    contour_coordinate,
    edge_conditions,
    mp_density,
    mp_inverse_moment,
)
from tdm.wsmodel import model_coordinate

A_EDGE, B_EDGE = 3 - 2 * math.sqrt(2), 3 + 2 * math.sqrt(2)


def test_default_contour_is_valid():
    DEFAULT_CONTOUR.check(A_EDGE, B_EDGE)
    assert DEFAULT_CONTOUR.center - DEFAULT_CONTOUR.rx > 0
    assert DEFAULT_CONTOUR.nodes == 4096


def test_ellipse_enclosing_pole_is_rejected():
    # centre 3, semi-axes (3.5, 1.0) reaches -0.5 and so encloses the pole of V' at 0
    with pytest.raises(ContourError):
        Ellipse(3.0, 3.5, 1.0, 4096).check(A_EDGE, B_EDGE)
    with pytest.raises(ContourError):
        Ellipse(3.0, 2.0, 0.5, 4096).check(A_EDGE, B_EDGE)


def test_edge_conditions():
    first, second = edge_conditions()
    assert abs(first) < 1e-10
    assert abs(second - 1) < 1e-10


def test_contour_M0_vanishes():
    assert abs(contour_coordinate("M", 0)) < 1e-10
    assert abs(contour_coordinate("J", 0)) < 1e-10


@pytest.mark.parametrize("kind", ["M", "J"])
@pytest.mark.parametrize("ell", [1, 2, 3])
def test_contour_magnitudes(kind, ell):
    got = contour_coordinate(kind, ell)
    ref = float(model_coordinate(kind, ell))
    assert abs(got.imag) < 1e-10 * abs(ref)
    assert abs(abs(got.real) - abs(ref)) < 1e-10 * abs(ref)


@pytest.mark.xfail(strict=True, reason="the infinity branch gives -m_l, -j_l; see decisions ledger")
@pytest.mark.parametrize("kind,ell,ref", [("M", 1, -(3 + 2 * math.sqrt(2)) / 2), ("J", 2, 1 / (2 * (3 + 2 * math.sqrt(2)) ** 2))])
def test_contour_coordinate_signed(kind, ell, ref):
    assert abs(contour_coordinate(kind, ell) - ref) < 1e-10 * abs(ref)


def test_contour_rejects_bad_kind():
    with pytest.raises(ValueError):
        contour_coordinate("Q", 1)


def test_density_normalized():
    total, _ = quad(lambda x: float(mp_density(x)), A_EDGE, B_EDGE)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert mp_density(np.array([0.1, 6.0])).tolist() == [0.0, 0.0]


def test_inverse_moments():
    assert mp_inverse_moment(0) == pytest.approx(1.0, rel=1e-12)
    assert mp_inverse_moment(1) == pytest.approx(1.0, rel=1e-12)
    assert mp_inverse_moment(3) == pytest.approx(6.0, rel=1e-12)
    for k in range(1, 9):
        assert mp_inverse_moment(k) == pytest.approx(schroder(k), rel=1e-10)


@pytest.mark.parametrize("ell", range(1, 7))
def test_parameter_derivatives(ell):
    rep = verify_parameter_derivatives(ell)
    assert rep.passed, str(rep)


def test_parameter_derivatives_low_order_values():
    rep = verify_parameter_derivatives(1)
    assert rep.checks["dm/da = (l+1/2) m_(l+1)"]
    assert rep.checks["dm/db partial fractions"]
    assert verify_parameter_derivatives(2).checks["dm/da = (l+1/2) m_(l+1)"]
    with pytest.raises(ValueError):
        verify_parameter_derivatives(0)
