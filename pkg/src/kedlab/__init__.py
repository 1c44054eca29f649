"""Kinetic-energy-density monomials: enumeration, admissibility, asymptotic probes and fits."""
from .terms import (
    AdmissibilityClass,
    Boundary,
    KedTerm,
    classify,
    enumerate_terms,
    make_term,
    max_derivative_order,
    predicted_log_slope,
)
from .densities import (
    iterated_derivative,
    log_term_eval,
    make_exponential,
    make_gaussian,
    make_ho1d_ground,
    make_hydrogenic,
    make_periodic_cosine,
    make_poly_exponential,
    normalized_derivative,
    profile_from_id,
)
from .quadrature import RadialGrid, default_grid, integrate
from .reference import fit_expansion, reference_ked, tf_constant
from .probe import probe_periodic, probe_term, validate_bound

__version__ = "0.1.0"
