"""Exact leading-order cumulants of Wigner-Smith time-delay power traces.

Layers, bottom to top:

* :mod:`tdm.exactnum`: rationals and the field Q(sqrt 2);
* :mod:`tdm.symcore`: sparse polynomials and rational expressions with formal
  square-root generators;
* :mod:`tdm.looprec`: the loop-equation recursion for ``G_{v,0}``;
* :mod:`tdm.wsmodel`: specialization to the inverse delay times;
* :mod:`tdm.seriesx`: power-series expansion and extraction of ``alpha``;
* :mod:`tdm.oracle`: independent checks;
* :mod:`tdm.cli`: command-line front end.
"""

from .exactnum import QuadNum
from .looprec import GreenCache, PointGreenCache, check_structure, green
from .seriesx import CumulantRecord, extract_alpha
from .wsmodel import gen_F, specialize

__version__ = "0.1.0"

__all__ = [
    "QuadNum",
    "GreenCache",
    "PointGreenCache",
    "green",
    "check_structure",
    "specialize",
    "gen_F",
    "CumulantRecord",
    "extract_alpha",
    "__version__",
]
