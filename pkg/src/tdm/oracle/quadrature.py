"""Floating-point quadrature oracles for the model constants and the density."""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.special import roots_chebyu

from ..wsmodel import mp_density_params

__all__ = [
    "Ellipse",
    "DEFAULT_CONTOUR",
    "ContourError",
    "contour_integral",
    "contour_coordinate",
    "edge_conditions",
    "mp_density",
    "mp_inverse_moment",
]


class ContourError(ValueError):
    """The contour does not separate the cut from the pole of V' at the origin."""


class Ellipse:
    """Anticlockwise ellipse ``center + rx cos t + i ry sin t`` sampled at ``nodes`` points."""

    def __init__(self, center: float, rx: float, ry: float, nodes: int = 4096):
        self.center, self.rx, self.ry, self.nodes = center, rx, ry, nodes

    @classmethod
    def confocal(cls, ratio: float = 2.0**0.25, nodes: int = 4096) -> "Ellipse":
        """Ellipse with foci ``a, b``: the image of ``|u| = ratio`` under ``w = 3 + sqrt2 (u + 1/u)``.

        In the ``u`` plane the cut is the unit circle and the pole ``w = 0`` sits
        at ``|u| = sqrt 2``; the geometric mean ``2**(1/4)`` balances the
        trapezoid error from both sides (about ``ratio**(-nodes)``).
        """
        h = math.sqrt(2.0)
        return cls(3.0, h * (ratio + 1.0 / ratio), h * (ratio - 1.0 / ratio), nodes)

    def check(self, a: float, b: float) -> None:
        left, right = self.center - self.rx, self.center + self.rx
        if left <= 0.0:
            raise ContourError(f"ellipse reaches Re w = {left:.4g} and encloses the pole at 0")
        if not (left < a and right > b):
            raise ContourError(f"ellipse [{left:.4g}, {right:.4g}] does not enclose [{a:.4g}, {b:.4g}]")


DEFAULT_CONTOUR = Ellipse.confocal()
WORKING_DIGITS = 40


def _edges_mp():
    a, b = mp_density_params()
    sq2 = mpmath.sqrt(2)
    return a.rat + a.surd * sq2, b.rat + b.surd * sq2


def _edges() -> tuple[float, float]:
    a, b = mp_density_params()
    return float(a), float(b)


def contour_integral(fn, contour: Ellipse = DEFAULT_CONTOUR) -> complex:
    """``oint dw/(2 pi i) fn(w)`` by the trapezoid rule in extended precision.

    ``fn`` receives an ``mpmath.mpc`` point.  The sum runs at
    :data:`WORKING_DIGITS` digits because the integrands of high-order
    coordinates exceed the result by many orders of magnitude near the edges.
    """
    a, b = _edges()
    contour.check(a, b)
    with mpmath.workdps(WORKING_DIGITS):
        n = contour.nodes
        total = mpmath.mpc(0)
        for k in range(n):
            t = 2 * mpmath.pi * k / n
            w = contour.center + contour.rx * mpmath.cos(t) + 1j * contour.ry * mpmath.sin(t)
            dw = -contour.rx * mpmath.sin(t) + 1j * contour.ry * mpmath.cos(t)
            total += fn(w) * dw
        value = total / (1j * n)
        return complex(value)


def _sqrt_inf_branch(w, a, b):
    """``sqrt((w-a)(w-b))`` with the cut on ``[a, b]`` and ``~ w`` at infinity."""
    return mpmath.sqrt(w - a) * mpmath.sqrt(w - b)


def _vprime(w):
    return (w - 1) / (2 * w)


def contour_coordinate(kind: str, ell: int, contour: Ellipse = DEFAULT_CONTOUR) -> complex:
    """Numerical ``oint dw/(2 pi i) V'(w) / ((w - edge)**l sqrt((w-a)(w-b)))``.

    ``edge`` is ``a`` for ``kind="M"`` and ``b`` for ``kind="J"``; the square
    root is the branch that behaves like ``w`` at infinity.
    """
    if kind not in ("M", "J"):
        raise ValueError(f"kind must be 'M' or 'J', got {kind!r}")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    with mpmath.workdps(WORKING_DIGITS):
        a, b = _edges_mp()
        edge = a if kind == "M" else b
        return contour_integral(lambda w: _vprime(w) / ((w - edge) ** ell * _sqrt_inf_branch(w, a, b)), contour)


def edge_conditions(contour: Ellipse = DEFAULT_CONTOUR) -> tuple[complex, complex]:
    """The two normalization integrals; they should equal 0 and 1."""
    with mpmath.workdps(WORKING_DIGITS):
        a, b = _edges_mp()
        first = contour_integral(lambda w: _vprime(w) / _sqrt_inf_branch(w, a, b), contour)
        second = contour_integral(lambda w: w * _vprime(w) / _sqrt_inf_branch(w, a, b), contour)
    return first, second


def mp_density(x):
    """Marchenko-Pastur density ``sqrt((x-a)(b-x)) / (2 pi x)`` on ``[a, b]``, zero elsewhere."""
    a, b = _edges()
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = np.sqrt((xi - a) * (b - xi)) / (2.0 * math.pi * xi)
    return out


def mp_inverse_moment(kappa: int, nodes: int = 256) -> float:
    """``int rho(x) x**(-kappa) dx`` by Chebyshev-Gauss quadrature of the second kind.

    With ``x = 3 + 2 sqrt2 cos t`` the weight ``sqrt((x-a)(b-x))`` becomes
    ``2 sqrt2 sin t``, leaving ``(4/pi) int_{-1}^{1} sqrt(1-u**2) x(u)**(-kappa-1) du``.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    u, w = roots_chebyu(nodes)
    x = 3.0 + 2.0 * math.sqrt(2.0) * u
    return float(4.0 / math.pi * np.sum(w * x ** (-kappa - 1)))
