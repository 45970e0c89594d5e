"""Function theory on finite weighted graphs.

Real-valued vertex functions, the weighted Laplacian, harmonic and
subharmonic predicates, the k-step averaging iterates that drive the
Dirichlet solvers, greedy maximally increasing paths, and the maximum
principle checker.  Everything here is a pure function of an immutable
graph plus a total vertex function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections import deque
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InputError, NotSubharmonicError, StalledPathError
from .graph_core import WeightedGraph, is_quasi_reversible

#: a vertex function is a total map from vertex id to a finite real
VertexFunction = dict[str, float]

DEFAULT_TOL = 1e-9


def require_total(graph: WeightedGraph, f: Mapping[str, float]) -> None:
    missing = [v for v in graph.vertex_ids if v not in f]
    if missing:
        raise InputError(f"vertex function missing {len(missing)} vertices, "
                         f"first: {missing[0]}")
    for v in graph.vertex_ids:
        if not math.isfinite(f[v]):
            raise InputError(f"vertex function not finite at {v}")


def function_vector(graph: WeightedGraph, f: Mapping[str, float]) -> np.ndarray:
    return np.array([f[v] for v in graph.vertex_ids], dtype=np.float64)


def vector_function(graph: WeightedGraph, x: np.ndarray) -> VertexFunction:
    return {v: float(x[i]) for i, v in enumerate(graph.vertex_ids)}


def laplacian(graph: WeightedGraph, f: Mapping[str, float], x: str) -> float:
    """Weighted Laplacian at x: sum of lambda(x, z) * (f(z) - f(x)).

    Exactly 0 at an absorbing vertex since the only term is the self-loop.
    """
    i = graph.index(x)
    fx = f[x]
    t, w = graph.row_arrays(i)
    ids = graph.vertex_ids
    return math.fsum(wij * (f[ids[j]] - fx) for j, wij in zip(t, w))


def laplacian_all(graph: WeightedGraph, f: Mapping[str, float]) -> VertexFunction:
    """Laplacian at every vertex at once (vectorized)."""
    vec = function_vector(graph, f)
    a = graph.to_matrix()
    rowsum = np.asarray(a.sum(axis=1)).ravel()
    delta = a @ vec - rowsum * vec
    return vector_function(graph, delta)


def neighbor_average(graph: WeightedGraph, f: Mapping[str, float], x: str) -> float:
    """The lambda-weighted average of f over the successors of x."""
    i = graph.index(x)
    t, w = graph.row_arrays(i)
    ids = graph.vertex_ids
    return math.fsum(wij * f[ids[j]] for j, wij in zip(t, w))


def is_harmonic(graph: WeightedGraph, f: Mapping[str, float],
                tol: float = DEFAULT_TOL) -> bool:
    """True when |laplacian| <= tol at every vertex."""
    require_total(graph, f)
    return all(abs(d) <= tol for d in laplacian_all(graph, f).values())


def is_subharmonic(graph: WeightedGraph, f: Mapping[str, float],
                   tol: float = DEFAULT_TOL) -> bool:
    """True when laplacian >= -tol at every vertex; equivalently each value
    is at most its weighted neighbor average (same quantity, shifted)."""
    require_total(graph, f)
    return all(d >= -tol for d in laplacian_all(graph, f).values())


def k_step_average(graph: WeightedGraph, f: Mapping[str, float], k: int) -> VertexFunction:
    """Apply one-step neighbor averaging k times.

    Returns the function x -> (k-step kernel row at x) applied to f, computed
    by k sparse matrix-vector products, never by materializing the k-step
    kernel.  k = 0 returns a copy of f.
    """
    if k < 0:
        raise InputError(f"averaging order must be >= 0, got {k}")
    require_total(graph, f)
    vec = function_vector(graph, f)
    a = graph.to_matrix()
    for _ in range(k):
        vec = a @ vec
    return vector_function(graph, vec)


def k_step_average_orbit(graph: WeightedGraph, f: Mapping[str, float],
                         k_max: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (k, averaged vector) for k = 0 .. k_max, sharing the work."""
    require_total(graph, f)
    vec = function_vector(graph, f)
    a = graph.to_matrix()
    yield 0, vec.copy()
    for k in range(1, k_max + 1):
        vec = a @ vec
        yield k, vec.copy()


# -- maximally increasing paths ---------------------------------------------


@dataclass(frozen=True)
class IncreasingPath:
    """A cycle-free directed path along which the generating function
    strictly increases; ends either at an absorbing vertex or at the step
    budget / truncation frontier (the finite stand-in for a ray)."""
    vertices: tuple[str, ...]
    terminal_kind: str  # "boundary" | "frontier"


def check_increasing_path(graph: WeightedGraph, f: Mapping[str, float],
                          path: IncreasingPath) -> None:
    """Re-validate the path invariants; raises InternalCheckError-grade
    AssertionError on failure (used by tests and post-hoc checks)."""
    vs = path.vertices
    assert len(set(vs)) == len(vs), "repeated vertex on path"
    for a, b in zip(vs, vs[1:]):
        assert graph.weight(a, b) > 0, f"missing edge {a} -> {b}"
        assert f[a] < f[b], f"not strictly increasing at {a} -> {b}"


def _level_set_walk(graph: WeightedGraph, f: Mapping[str, float],
                    start_idx: int) -> int | None:
    """BFS (by id order) through the connected level set of f at the start
    value; returns the first vertex where f is not locally constant, or
    None when the level set is closed (f constant on the component)."""
    ids = graph.vertex_ids
    level = f[ids[start_idx]]
    seen = {start_idx}
    queue = deque([start_idx])
    while queue:
        i = queue.popleft()
        t, w = graph.row_arrays(i)
        succ = sorted((ids[int(j)], int(j)) for j, wij in zip(t, w)
                      if wij > 0 and int(j) != i)
        if any(f[v] != level for v, _ in succ):
            return i
        for _, j in succ:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return None


def maximally_increasing_path(graph: WeightedGraph, f: Mapping[str, float],
                              start: str, max_len: int,
                              frontier: Iterable[str] = ()) -> IncreasingPath:
    """Greedy strictly-increasing walk: from each vertex step to the
    largest-valued successor (ties to the smallest id).

    When f is locally constant at the start, first walks the level set to a
    vertex with a non-constant neighborhood; the returned path begins there.
    Raises "stalled" when f is constant on the whole component, and "not
    subharmonic" when no increasing successor exists where one is required.
    The optional frontier set marks truncation frontier vertices so a path
    ending there reports terminal_kind="frontier".
    """
    require_total(graph, f)
    ids = graph.vertex_ids
    mask = graph.boundary_mask()
    frontier_set = set(frontier)

    i = graph.index(start)
    if mask[i]:
        raise InputError(f"start vertex {start} is absorbing")

    anchor = _level_set_walk(graph, f, i)
    if anchor is None:
        raise StalledPathError(
            f"stalled: function is constant on the component of {start}")

    path = [anchor]
    while not mask[path[-1]] and len(path) <= max_len:
        cur = path[-1]
        t, w = graph.row_arrays(cur)
        best: int | None = None
        fcur = f[ids[cur]]
        for j, wij in zip(t, w):
            j = int(j)
            if wij <= 0 or j == cur:
                continue
            fj = f[ids[j]]
            if fj <= fcur:
                continue
            if best is None or fj > f[ids[best]] or \
                    (fj == f[ids[best]] and ids[j] < ids[best]):
                best = j
        if best is None:
            raise NotSubharmonicError(
                f"not subharmonic: no increasing neighbor at {ids[cur]}")
        path.append(best)

    last = path[-1]
    if mask[last] and ids[last] not in frontier_set:
        terminal = "boundary"
    else:
        terminal = "frontier"
    return IncreasingPath(tuple(ids[i] for i in path), terminal)


# -- maximum principle -------------------------------------------------------


@dataclass(frozen=True)
class MaxPrincipleReport:
    sup_all: float
    sup_boundary: float
    agrees: bool
    attained_interior: bool
    constant_on_component: bool | None
    tol: float


def check_maximum_principle(graph: WeightedGraph, f: Mapping[str, float],
                            tol: float = DEFAULT_TOL) -> MaxPrincipleReport:
    """Report the supremum over all vertices versus over the absorbing
    boundary, and when the supremum is attained at an interior vertex,
    whether f is constant on that vertex's component."""
    require_total(graph, f)
    mask = graph.boundary_mask()
    ids = graph.vertex_ids
    values = function_vector(graph, f)
    sup_all = float(values.max())
    sup_boundary = float(values[mask].max()) if mask.any() else float("-inf")
    agrees = abs(sup_all - sup_boundary) <= tol

    attained_interior = False
    constant: bool | None = None
    interior_hits = [i for i in range(len(ids))
                     if not mask[i] and values[i] >= sup_all - tol]
    if interior_hits:
        attained_interior = True
        i0 = interior_hits[0]
        comp = _component_of_index(graph, i0)
        comp_vals = values[sorted(comp)]
        constant = bool(comp_vals.max() - comp_vals.min() <= tol)
    return MaxPrincipleReport(sup_all, sup_boundary, agrees,
                              attained_interior, constant, tol)


def _component_of_index(graph: WeightedGraph, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        t, w = graph.row_arrays(i)
        for j, wij in zip(t, w):
            j = int(j)
            if wij > 0 and j not in seen:
                seen.add(j)
                queue.append(j)
    return seen


# -- extension by zero --------------------------------------------------------


def extend_by_zero(graph: WeightedGraph,
                   boundary_values: Mapping[str, float]) -> VertexFunction:
    """Extend non-negative boundary data by 0 to the whole graph.

    The result is subharmonic: at interior vertices the value is 0 with a
    non-negative neighbor average, at absorbing vertices it is fixed.
    Negative values are rejected (the construction needs f >= 0).
    """
    mask = graph.boundary_mask()
    ids = graph.vertex_ids
    boundary = {ids[i] for i in range(len(ids)) if mask[i]}
    out = {v: 0.0 for v in ids}
    for v, value in boundary_values.items():
        if v not in boundary:
            raise InputError(f"{v} is not an absorbing boundary vertex")
        if value < 0:
            raise InputError(f"extension by zero needs values >= 0, "
                             f"got {value:.12g} at {v}")
        out[v] = float(value)
    return out


# -- file format --------------------------------------------------------------


def parse_vertex_function(lines: Iterable[str]) -> VertexFunction:
    """Parse `value <vertex> <real>` lines; '#' comments ignored."""
    out: VertexFunction = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "value" or len(parts) != 3:
            raise InputError(f"line {lineno}: expected 'value <vertex> <real>'")
        try:
            out[parts[1]] = float(parts[2])
        except ValueError:
            raise InputError(f"line {lineno}: bad value {parts[2]!r}") from None
    return out


def load_vertex_function(path: str) -> VertexFunction:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_vertex_function(fh)
