"""One-cut random matrix loop equations.

Equilibrium measures for polynomial external fields, the genus expansion of
the resolvent from the loop-equation hierarchy, free-energy derivative
tables, and independent finite-N and combinatorial oracles.
"""
from .algebra import AlgebraicFn, LaurentSeries, PolyZ, laurent_expand
from .equilibrium import EquilibriumError, EquilibriumMeasure, solve_equilibrium
from .estimator import OneCutLoopSolver
from .jets import Jet, JetSpace, jet_space
from .loop import (
    EgDerivativeTable,
    LoopError,
    LoopHierarchy,
    extract_eg_derivatives,
    solve_hierarchy,
    vertex_derivative,
)
from .model import AdmissibilityParams, ExternalField, FieldError, admissibility_check, build_field
from .oracles import (
    ContourSpec,
    OracleError,
    contour_residual,
    finite_n_one_point,
    finite_n_partition,
    moment_extrapolation,
    pairing_genus_counts,
    ward_identity_check,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityParams", "AlgebraicFn", "ContourSpec", "EgDerivativeTable", "EquilibriumError",
    "EquilibriumMeasure", "ExternalField", "FieldError", "Jet", "JetSpace", "LaurentSeries", "LoopError",
    "LoopHierarchy", "OneCutLoopSolver", "OracleError", "PolyZ", "admissibility_check", "build_field",
    "contour_residual", "extract_eg_derivatives", "finite_n_one_point", "finite_n_partition", "jet_space",
    "laurent_expand", "moment_extrapolation", "pairing_genus_counts", "solve_equilibrium", "solve_hierarchy",
    "vertex_derivative", "ward_identity_check",
]
