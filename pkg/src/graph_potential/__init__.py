"""Discrete potential theory on weighted directed graphs.

Dirichlet problems with two kinds of boundary: absorbing vertices inside the
graph and ends at infinity.  Provides the graph representation and structure
analysis, harmonic function theory, truncations of infinite graphs with end
detection, iterative/direct/alternating solvers, Green's-function
diagnostics, and a seeded random-walk oracle.
"""

from .graph_core import (StructureFunction, ValidationReport, WeightedGraph,
                         compose, component, interior, is_boundary_connected,
                         is_connected, is_quasi_reversible, kernel_power,
                         kiselman_boundary, load_graph, neighborhood, validate)
from .potential import (IncreasingPath, MaxPrincipleReport,
                        check_maximum_principle, extend_by_zero, is_harmonic,
                        is_subharmonic, k_step_average, laplacian,
                        maximally_increasing_path)
from .ends import (EndDecomposition, LazyGraph, Truncation, classify_sequence,
                   check_continuity_at_infinity, default_radius_ladder,
                   detect_ends, truncate)
from .families import half_plane, ladder, line, make_family, tree
from .dirichlet import (BoundaryData, GreensTable, Solution,
                        check_vanishing_at_infinity, greens_function,
                        load_boundary_data, solve_direct, solve_iterative,
                        solve_one_ended)
from .schwarz import (AlternationTrace, Slice, SlicePair, Subdomain,
                      build_subdomains, choose_slices, schwarz_solve)
from .montecarlo import Estimate, WalkOutcome, estimate_harmonic, run_walk

__version__ = "0.1.0"

__all__ = [
    "AlternationTrace", "BoundaryData", "EndDecomposition", "Estimate",
    "GreensTable", "IncreasingPath", "LazyGraph", "MaxPrincipleReport",
    "Slice", "SlicePair", "Solution", "StructureFunction", "Subdomain",
    "Truncation", "ValidationReport", "WalkOutcome", "WeightedGraph",
    "build_subdomains", "check_continuity_at_infinity",
    "check_maximum_principle", "check_vanishing_at_infinity",
    "choose_slices", "classify_sequence", "component", "compose",
    "default_radius_ladder", "detect_ends", "estimate_harmonic",
    "extend_by_zero", "greens_function", "half_plane", "interior",
    "is_boundary_connected", "is_connected", "is_harmonic",
    "is_quasi_reversible", "is_subharmonic", "k_step_average",
    "kernel_power", "kiselman_boundary", "ladder", "laplacian", "line",
    "load_boundary_data", "load_graph", "make_family",
    "maximally_increasing_path", "neighborhood", "run_walk", "schwarz_solve",
    "solve_direct", "solve_iterative", "solve_one_ended", "tree", "truncate",
    "validate",
]
