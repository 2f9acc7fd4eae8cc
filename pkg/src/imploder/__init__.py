"""Numerical toolkit for polynomial dynamics and parabolic implosion."""

from .dynamics import (
    PolynomialMap,
    compose,
    critical_points,
    cycle_multiplier,
    fixed_points,
    iterate_map,
    parse_complex,
    parse_poly,
    periodic_points,
    roots,
)
from .errors import DynamicsError
from .fatou import ParabolicModel, model_from_cubic, normalize_parabolic, phi, psi
from .julia import connectivity, escape_radius, membership
from .lavaurs import find_attracting_fixed_points
from .implosion import SkewMap, standard_skew, wandering_witness

__version__ = "0.1.0"

__all__ = [
    "PolynomialMap", "compose", "critical_points", "cycle_multiplier", "fixed_points",
    "iterate_map", "parse_complex", "parse_poly", "periodic_points", "roots",
    "DynamicsError", "ParabolicModel", "model_from_cubic", "normalize_parabolic", "phi", "psi",
    "connectivity", "escape_radius", "membership", "find_attracting_fixed_points",
    "SkewMap", "standard_skew", "wandering_witness",
]
