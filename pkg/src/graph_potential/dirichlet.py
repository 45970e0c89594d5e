"""Dirichlet solvers and Green's-function diagnostics.

The workhorse is the monotone averaging construction: split the boundary
data into non-negative halves, extend each by zero, and iterate one-step
averaging; each half increases monotonically to the harmonic solution.  A
pinned sparse linear solve provides the independent oracle, and the
one-ended solver wraps the iteration in truncation windows with the frontier
clamped to the end's value.

Green diagnostics use the interior-killed kernel (absorbing rows zeroed
after absorption is tallied once); the literal per-step transition values
remain available for the vanishing-at-infinity search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse import csgraph

from .errors import (ConvergenceError, EndStructureError, InputError,
                     InternalCheckError, SingularSystemError)
from .graph_core import WeightedGraph, is_quasi_reversible
from .ends import (EndDecomposition, LazyGraph, Truncation,
                   check_continuity_at_infinity, default_radius_ladder,
                   detect_ends, truncate)

MONOTONE_SLACK = 1e-12


@dataclass
class BoundaryData:
    """Values on the absorbing boundary plus one value per end.

    Missing vertices and ends default to 0, consistent with the
    extension-by-zero construction.
    """
    vertex_values: dict[str, float] = field(default_factory=dict)
    end_values: dict[str, float] = field(default_factory=dict)

    def bound(self) -> float:
        vals = [abs(v) for v in self.vertex_values.values()]
        vals += [abs(v) for v in self.end_values.values()]
        return max(vals, default=0.0)

    def check_finite(self) -> None:
        for k, v in {**self.vertex_values, **self.end_values}.items():
            if not math.isfinite(v):
                raise InputError(f"boundary value at {k} is not finite")

    def shifted(self, c: float) -> "BoundaryData":
        return BoundaryData(
            {v: x - c for v, x in self.vertex_values.items()},
            {e: x - c for e, x in self.end_values.items()})


@dataclass
class Solution:
    values: dict[str, float]
    method: str
    iterations: int
    residual: float
    metadata: dict = field(default_factory=dict)


# -- shared machinery ---------------------------------------------------------


def materialize_boundary_data(window: WeightedGraph, data: BoundaryData,
                              end_map: Mapping[str, str] | None = None) -> BoundaryData:
    """Explicit per-vertex data on every absorbing vertex of the window
    (frontier vertices resolved through their end, missing entries 0)."""
    vec = boundary_value_vector(window, data, end_map)
    mask = window.boundary_mask()
    ids = window.vertex_ids
    return BoundaryData(
        {ids[i]: float(vec[i]) for i in np.nonzero(mask)[0]}, {})


def boundary_value_vector(window: WeightedGraph, data: BoundaryData,
                          end_map: Mapping[str, str] | None = None) -> np.ndarray:
    """Full-length vector carrying the data on absorbing vertices (0 on the
    interior).  Frontier vertices take their end's value through end_map."""
    end_map = end_map or {}
    mask = window.boundary_mask()
    ids = window.vertex_ids
    out = np.zeros(len(ids))
    for i in np.nonzero(mask)[0]:
        v = ids[i]
        if v in data.vertex_values:
            out[i] = float(data.vertex_values[v])
        elif v in end_map:
            out[i] = float(data.end_values.get(end_map[v], 0.0))
    return out


def pinned_matrix(window: WeightedGraph) -> sp.csr_matrix:
    """Transition matrix with absorbing rows replaced by an exact identity,
    so boundary values are preserved bit-for-bit under iteration."""
    a = window.to_matrix().copy().tocsr()
    mask = window.boundary_mask()
    rows = window.row_index_of_entries()
    a.data = a.data.copy()
    a.data[mask[rows]] = 0.0
    a.eliminate_zeros()
    return (a + sp.diags(mask.astype(np.float64))).tocsr()


def residual_of(window: WeightedGraph, values: Mapping[str, float] | np.ndarray) -> float:
    """Max |laplacian| over interior vertices, recomputed from the original
    (unpinned) weights."""
    if isinstance(values, np.ndarray):
        vec = values
    else:
        vec = np.array([values[v] for v in window.vertex_ids])
    a = window.to_matrix()
    rowsum = np.asarray(a.sum(axis=1)).ravel()
    delta = a @ vec - rowsum * vec
    mask = window.boundary_mask()
    if (~mask).any():
        return float(np.abs(delta[~mask]).max())
    return 0.0


def _values_dict(window: WeightedGraph, vec: np.ndarray) -> dict[str, float]:
    return {v: float(vec[i]) for i, v in enumerate(window.vertex_ids)}


# -- iterative solver ---------------------------------------------------------


class _MonotoneHalf:
    """One non-negative half of the splitting, iterated by one-step
    averaging; tracks the sup-norm increment and a geometric tail estimate
    so iteration stops only when the remaining error is below tolerance."""

    def __init__(self, start: np.ndarray, interior: np.ndarray, scale: float):
        self.vec = start
        self.interior = interior
        self.scale = max(scale, 1.0)
        self.increment = math.inf
        self.ratios: list[float] = []

    def step(self, a: sp.csr_matrix) -> None:
        new = a @ self.vec
        diff = new - self.vec
        worst = float(diff[self.interior].min()) if self.interior.size else 0.0
        if worst < -MONOTONE_SLACK * self.scale:
            raise InternalCheckError(
                f"monotone averaging decreased by {-worst:.3g}")
        inc = float(np.abs(diff).max())
        if math.isfinite(self.increment) and self.increment > 0:
            self.ratios.append(inc / self.increment)
        self.increment = inc
        self.vec = new

    def converged(self, tol: float) -> bool:
        inc = self.increment
        if inc == 0.0:
            return True
        if inc <= 1e-16 * self.scale:
            return True
        if inc > tol / 2:
            return False
        recent = self.ratios[-5:]
        if not recent:
            return False
        rho = min(max(recent), 1.0 - 1e-12)
        tail = inc * rho / (1.0 - rho)
        return tail <= tol / 2


def solve_iterative(window: WeightedGraph, data: BoundaryData,
                    end_map: Mapping[str, str] | None = None,
                    tol: float = 1e-8, max_iter: int = 10 ** 6) -> Solution:
    """Monotone averaging solver.

    Splits the data into non-negative halves, extends each by zero, and
    iterates one-step averaging until the sup-norm increment plus its
    geometric tail estimate drop below tol; the residual is recomputed
    independently at the end.  Monotonicity of each half is asserted every
    step.  A non-quasi-reversible window produces a warning in the metadata,
    not an error.
    """
    data.check_finite()
    warnings = []
    qr, _ = is_quasi_reversible(window)
    if not qr:
        warnings.append("window is not quasi-reversible; "
                        "uniqueness is not guaranteed")

    bvec = boundary_value_vector(window, data, end_map)
    mask = window.boundary_mask()
    interior_idx = np.nonzero(~mask)[0]
    a = pinned_matrix(window)
    scale = float(np.abs(bvec).max()) if bvec.size else 0.0

    plus = _MonotoneHalf(np.maximum(bvec, 0.0), interior_idx, scale)
    minus = _MonotoneHalf(np.maximum(-bvec, 0.0), interior_idx, scale)

    iterations = 0
    while not (plus.converged(tol) and minus.converged(tol)):
        if iterations >= max_iter:
            raise ConvergenceError("iteration budget exhausted",
                                   max(plus.increment, minus.increment))
        plus.step(a)
        minus.step(a)
        iterations += 1

    h = plus.vec - minus.vec
    res = residual_of(window, h)
    if res > max(tol, 1e-12 * max(scale, 1.0)):
        raise InternalCheckError(
            f"recomputed residual {res:.3g} exceeds tolerance {tol:.3g}")
    meta = {"tol": tol, "max_iter": max_iter, "warnings": warnings,
            "final_increment": max(plus.increment, minus.increment)}
    return Solution(_values_dict(window, h), "iterative", iterations, res, meta)


# -- direct solver ------------------------------------------------------------


def _check_boundary_attachment(window: WeightedGraph) -> None:
    mask = window.boundary_mask()
    if not mask.any():
        raise SingularSystemError(
            "interior component with no boundary attachment")
    a = window.positive_support()
    reached = mask.astype(np.float64)
    for _ in range(len(window)):
        new = np.minimum(reached + (a @ reached), 1.0)
        new = (new > 0).astype(np.float64)
        if (new == reached).all():
            break
        reached = new
    if not reached.all():
        raise SingularSystemError(
            "interior component with no boundary attachment")


def solve_direct(window: WeightedGraph, data: BoundaryData,
                 end_map: Mapping[str, str] | None = None) -> Solution:
    """Sparse LU oracle: pin the boundary rows and solve the interior
    harmonicity system exactly (one iterative-refinement pass)."""
    data.check_finite()
    _check_boundary_attachment(window)
    mask = window.boundary_mask()
    n = len(window)
    bvec = boundary_value_vector(window, data, end_map)
    interior_idx = np.nonzero(~mask)[0]

    h = bvec.copy()
    if interior_idx.size:
        a = pinned_matrix(window)
        aii = a[interior_idx][:, interior_idx]
        aib = a[interior_idx][:, np.nonzero(mask)[0]]
        m = (sp.eye(interior_idx.size, format="csr") - aii).tocsc()
        rhs = aib @ bvec[np.nonzero(mask)[0]]
        lu = spla.splu(m)
        x = lu.solve(rhs)
        x += lu.solve(rhs - m @ x)
        h[interior_idx] = x

    res = residual_of(window, h)
    if res > 1e-10 * max(1.0, float(np.abs(bvec).max())):
        raise SingularSystemError(
            f"direct solve residual {res:.3g} too large; system near-singular")
    return Solution(_values_dict(window, h), "direct", 0, res,
                    {"refinement_passes": 1})


# -- Green's function ----------------------------------------------------------


@dataclass
class GreensTable:
    """Partial sums of the interior-killed step kernels from one source.

    ``decay`` reports the empirical verdict over the last decade of terms:
    "summable" when increments shrink geometrically (per-step block rate
    below 0.99), "divergent" when they do not, "inconclusive" for runs too
    short to judge.
    """
    source: str
    target: str
    value: float
    order: int
    tail_bound: float
    decay: str
    block_rate: float | None
    increments: np.ndarray = field(repr=False)

    def partial_sums(self) -> np.ndarray:
        base = 1.0 if self.source == self.target else 0.0
        return base + np.cumsum(np.concatenate([[0.0], self.increments]))


def interior_killed_matrix(window: WeightedGraph) -> sp.csr_matrix:
    """Weights with every absorbing row zeroed: the walk is killed at the
    boundary after the arrival step is counted."""
    a = window.to_matrix().copy().tocsr()
    mask = window.boundary_mask()
    rows = window.row_index_of_entries()
    a.data = a.data.copy()
    a.data[mask[rows]] = 0.0
    a.eliminate_zeros()
    return a


def greens_function(window: WeightedGraph, x: str, y: str,
                    max_order: int = 500,
                    tail_tol: float | None = None) -> GreensTable:
    """Sum the interior-killed k-step transition values from x to y.

    Stops at max_order or, when tail_tol is given, as soon as the two most
    recent increments drop below it (two, because bipartite-ish graphs
    alternate zero increments).
    """
    mask = window.boundary_mask()
    ix, iy = window.index(x), window.index(y)
    if mask[ix]:
        raise InputError(f"source {x} must be an interior vertex")
    if max_order < 1:
        raise InputError("max_order must be >= 1")

    qt = interior_killed_matrix(window).T.tocsr()
    vec = np.zeros(len(window))
    vec[ix] = 1.0
    increments = []
    for k in range(1, max_order + 1):
        vec = qt @ vec
        increments.append(float(vec[iy]))
        if tail_tol is not None and k >= 2 and \
                max(increments[-1], increments[-2]) < tail_tol:
            break
    inc = np.array(increments)
    value = (1.0 if ix == iy else 0.0) + float(inc.sum())
    tail_bound = float(inc[-2:].max()) if inc.size >= 2 else float(inc[-1:].max())

    k = inc.size
    m = max(10, k // 10)
    if k < 2 * m:
        decay, rate = ("summable", 0.0) if tail_bound == 0.0 else ("inconclusive", None)
    else:
        b2 = float(inc[k - m:].sum())
        b1 = float(inc[k - 2 * m:k - m].sum())
        if b2 == 0.0:
            decay, rate = "summable", 0.0
        else:
            rate = (b2 / b1) ** (1.0 / m) if b1 > 0 else math.inf
            decay = "summable" if rate <= 0.99 else "divergent"
    return GreensTable(x, y, value, k, tail_bound, decay, rate, inc)


# -- vanishing at infinity -----------------------------------------------------


@dataclass
class VanishingReport:
    found: bool
    n1: int | None
    n2: int | None
    epsilon: float
    k_max: int
    dist_max: int
    detail: str


def check_vanishing_at_infinity(g: LazyGraph, decomposition: EndDecomposition,
                                y0: str, epsilon: float, k_max: int = 500,
                                dist_max: int | None = None) -> VanishingReport:
    """Search for (N1, N2) such that every vertex farther than N2 from y0
    keeps all its step-k transition values into y0 below epsilon for
    k in (N1, k_max].

    Uses the literal per-step kernel of the truncation window (frontier
    absorbed), scanning N1 over {0, k_max/2} and N2 over 0..dist_max.
    """
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    if epsilon > 1.0:
        return VanishingReport(True, 0, 0, epsilon, k_max,
                               dist_max or 0, "transition values are <= 1")

    trunc = truncate(g, decomposition.radius)
    window = trunc.window
    if dist_max is None:
        dist_max = decomposition.radius // 2
    iy0 = window.index(y0)

    und = window.undirected_support()
    dist = csgraph.dijkstra(und, directed=False, unweighted=True,
                            indices=iy0)

    p = pinned_matrix(window)
    c = np.zeros(len(window))
    c[iy0] = 1.0
    half = k_max // 2
    runmax_all = np.zeros(len(window))
    runmax_half = np.zeros(len(window))
    for k in range(1, k_max + 1):
        c = p @ c  # c_k(x) = k-step transition value from x into y0
        np.maximum(runmax_all, c, out=runmax_all)
        if k > half:
            np.maximum(runmax_half, c, out=runmax_half)

    finite = np.isfinite(dist)
    for n1, runmax in ((0, runmax_all), (half, runmax_half)):
        for n2 in range(0, dist_max + 1):
            sel = finite & (dist > n2)
            if not sel.any():
                break
            if float(runmax[sel].max()) < epsilon:
                return VanishingReport(
                    True, n1, n2, epsilon, k_max, dist_max,
                    f"max step value beyond distance {n2} is "
                    f"{float(runmax[sel].max()):.3g}")
    return VanishingReport(False, None, None, epsilon, k_max, dist_max,
                           "not found within budget")


# -- one-ended solver ----------------------------------------------------------


def solve_radius_ladder(radius: int) -> list[int]:
    """Default truncation ladder for the one-ended solver."""
    return sorted({max(2, radius // 2), max(3, (3 * radius) // 4), radius})


def solve_one_ended(g: LazyGraph, data: BoundaryData, tol: float = 1e-8,
                    r_ladder: Sequence[int] | None = None,
                    max_iter: int = 10 ** 6) -> Solution:
    """Dirichlet solver for one-ended graphs.

    Normalizes the data by the end value, solves truncations at each ladder
    radius with the frontier clamped to the normalized end value 0, and
    accepts when the two largest radii agree within tol on the smallest
    window.  The continuity-at-infinity certificate is attached to the
    metadata; its failure is a warning since discontinuous data still has a
    well-defined finest-window solution.
    """
    if not r_ladder:
        raise InputError("one-ended solve needs at least one ladder radius")
    r_ladder = sorted(set(int(r) for r in r_ladder))
    radius = r_ladder[-1]

    dec = detect_ends(g, default_radius_ladder(radius))
    if not dec.stable:
        raise EndStructureError("end decomposition unstable; enlarge radii")
    if len(dec.ends) != 1:
        raise EndStructureError(
            f"multiple ends: expected 1, found {len(dec.ends)}")
    end = dec.ends[0]

    cert = check_continuity_at_infinity(data, dec, epsilons=(0.1, 0.01))
    warnings = []
    if not cert.certified:
        warnings.append("boundary data failed the continuity-at-infinity "
                        "certificate; solution reflects the finest window only")

    c = float(data.end_values.get(end, 0.0))

    truncs: dict[int, Truncation] = {r: truncate(g, r) for r in r_ladder}
    solutions: dict[int, Solution] = {}
    for r in r_ladder:
        window = truncs[r].window
        # materialize the default-0 boundary values before normalizing,
        # so the shift applies to what the window actually sees
        explicit = materialize_boundary_data(window, data,
                                             truncs[r].end_of_frontier)
        solutions[r] = solve_iterative(window, explicit.shifted(c), None,
                                       tol, max_iter)

    delta = 0.0
    if len(r_ladder) >= 2:
        small = truncs[r_ladder[0]].window.vertex_ids
        ha = solutions[r_ladder[-2]].values
        hb = solutions[r_ladder[-1]].values
        delta = max(abs(ha[v] - hb[v]) for v in small)
        if delta > tol:
            raise ConvergenceError("no convergence in R", delta)

    finest = solutions[radius]
    values = {v: x + c for v, x in finest.values.items()}
    meta = {"tol": tol, "r_ladder": r_ladder, "ladder_delta": delta,
            "end": end, "end_value": c,
            "continuity_certified": cert.certified,
            "warnings": warnings + finest.metadata.get("warnings", [])}
    return Solution(values, "one-ended", finest.iterations,
                    finest.residual, meta)


# -- file formats ---------------------------------------------------------------


def parse_boundary_data(lines: Iterable[str]) -> BoundaryData:
    """Parse `vertex <id> <real>` and `end <end-id> <real>` lines."""
    data = BoundaryData()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("vertex", "end"):
            raise InputError(
                f"line {lineno}: expected 'vertex <id> <real>' or "
                f"'end <end-id> <real>'")
        try:
            value = float(parts[2])
        except ValueError:
            raise InputError(f"line {lineno}: bad value {parts[2]!r}") from None
        target = data.vertex_values if parts[0] == "vertex" else data.end_values
        if parts[1] in target:
            raise InputError(f"line {lineno}: duplicate entry for {parts[1]}")
        target[parts[1]] = value
    return data


def load_boundary_data(path: str) -> BoundaryData:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_boundary_data(fh)


def _csv_field(value: str) -> str:
    if "," in value or '"' in value:
        return '"' + value.replace('"', '""') + '"'
    return value


def solution_to_csv(solution: Solution, extra_meta: Mapping[str, object] | None = None) -> str:
    """Render `vertex,value` CSV with a `# meta:` header, 12 significant
    digits, rows sorted by vertex id (ids containing commas are quoted)."""
    meta = {"method": solution.method, "iterations": solution.iterations,
            "residual": f"{solution.residual:.12g}"}
    for k, v in (extra_meta or {}).items():
        meta[k] = v
    head = "# meta: " + " ".join(f"{k}={v}" for k, v in meta.items())
    lines = [head, "vertex,value"]
    for v in sorted(solution.values):
        lines.append(f"{_csv_field(v)},{solution.values[v]:.12g}")
    return "\n".join(lines) + "\n"
