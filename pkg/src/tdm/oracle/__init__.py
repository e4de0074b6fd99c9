"""Independent checks: closed forms, published values, quadrature, Monte Carlo."""

from .closed import P_coeff, Q_coeff, closed_alpha2, closed_alpha3, schroder, triple_legendre
from .derivatives import DerivativeReport, verify_parameter_derivatives
from .montecarlo import (
    EnsembleSample,
    InsufficientSamplesError,
    empirical_cumulants,
    partition_cumulant,
    power_traces,
    sample_ensemble,
    sample_spectrum,
    set_partitions,
)
from .quadrature import (
    DEFAULT_CONTOUR,
    ContourError,
    Ellipse,
    contour_coordinate,
    contour_integral,
    edge_conditions,
    mp_density,
    mp_inverse_moment,
)
from .reference import KNOWN_DISCREPANCIES, ReferenceTable, reference_table

__all__ = [
    "schroder",
    "P_coeff",
    "Q_coeff",
    "closed_alpha2",
    "closed_alpha3",
    "triple_legendre",
    "DerivativeReport",
    "verify_parameter_derivatives",
    "EnsembleSample",
    "InsufficientSamplesError",
    "sample_spectrum",
    "sample_ensemble",
    "power_traces",
    "set_partitions",
    "partition_cumulant",
    "empirical_cumulants",
    "Ellipse",
    "DEFAULT_CONTOUR",
    "ContourError",
    "contour_integral",
    "contour_coordinate",
    "edge_conditions",
    "mp_density",
    "mp_inverse_moment",
    "KNOWN_DISCREPANCIES",
    "ReferenceTable",
    "reference_table",
]
