"""Holomorphic quadrilaterals of four affine sections and their gradient trees.

Submodules: ``specfun`` (gamma, 2F1, Appell F1), ``geometry`` (quadrilateral
and configuration table), ``gradtree`` (the gradient tree), ``scmap`` (the
Schwarz-Christoffel map and its prevertex), ``modulus`` (conformal modulus),
``harness`` (eps sweeps) and ``cli``.
"""

from .errors import (ConfigError, DegenerateParametersError, DomainError, GeometryError,
                     HoloquadError, NonConvergenceError, PoleError, SolverError)
from .geometry import AffineSections, QuadGeometry, classify, intersections, quad_from_vertices
from .gradtree import GradientTree, build_tree
from .harness import boundary_collision_check, epsilon_sweep, sup_error_report
from .modulus import ModulusReport, modulus_from_prevertex, modulus_of_quad, rengel_bounds
from .scmap import SCQuadMap, evaluate, evaluate_rescaled, sc_integral, solve_prevertex

__version__ = "0.1.0"

__all__ = [
    "AffineSections", "ConfigError", "DegenerateParametersError", "DomainError",
    "GeometryError", "GradientTree", "HoloquadError", "ModulusReport", "NonConvergenceError",
    "PoleError", "QuadGeometry", "SCQuadMap", "SolverError", "boundary_collision_check",
    "build_tree", "classify", "epsilon_sweep", "evaluate", "evaluate_rescaled", "intersections",
    "modulus_from_prevertex", "modulus_of_quad", "quad_from_vertices", "rengel_bounds",
    "sc_integral", "solve_prevertex", "sup_error_report",
]
