"""Alternating-subdomain solver for windows with finitely many ends.

Each end is fenced off by two disjoint boundary-to-boundary slices; the
component beyond the inner slice (one end each) and the central component
inside the outer slices (no ends) become overlapping subdomains whose
added interface vertices are made absorbing.  Starting from the supremum of
the data on the interfaces, the end subdomains and the central subdomain
are solved alternately, exchanging interface traces; the resulting sweep
values decrease monotonically to the solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from collections import deque
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csgraph

from .dirichlet import (BoundaryData, Solution, boundary_value_vector,
                        residual_of, solve_direct, solve_iterative)
from .ends import (EndDecomposition, LazyGraph, check_continuity_at_infinity,
                   default_radius_ladder, detect_ends, truncate)
from .errors import (ConvergenceError, EndStructureError, InputError,
                     InternalCheckError, SliceError)
from .graph_core import WeightedGraph

CHAIN_SLACK = 1e-12
DIRECT_SIZE_LIMIT = 5000


@dataclass(frozen=True)
class Slice:
    """Boundary-to-boundary path whose removal separates one end from the
    base side of the window."""
    vertices: tuple[str, ...]
    end: str
    position: str  # "inside" | "outside"


@dataclass(frozen=True)
class SlicePair:
    end: str
    inside: Slice
    outside: Slice


@dataclass
class Subdomain:
    """Induced subgraph with the added interface made absorbing.

    ``core`` is the vertex set whose rows are preserved verbatim; the
    interface is the one-step out-neighborhood, re-rowed to self-loops.
    """
    graph: WeightedGraph
    core: list[str]
    interface: list[str]
    owns_end: str | None


@dataclass
class AlternationTrace:
    """Chronological sub-solution snapshots h_1, h_1', h_2, ... with the
    sup-delta of each subdomain between consecutive sweeps."""
    entries: list[tuple[str, dict[str, float]]] = field(default_factory=list)
    deltas: list[tuple[int, str, float]] = field(default_factory=list)

    def check_chain(self, slack: float = CHAIN_SLACK) -> None:
        """Assert the recorded snapshots are pointwise non-increasing on
        shared vertices."""
        for (la, ha), (lb, hb) in zip(self.entries, self.entries[1:]):
            worst = 0.0
            for v, b in hb.items():
                a = ha.get(v)
                if a is not None and b - a > worst:
                    worst = b - a
            if worst > slack:
                raise InternalCheckError(
                    f"alternation chain increased by {worst:.3g} "
                    f"between {la} and {lb}")

    def to_csv(self) -> str:
        lines = ["sweep,subdomain,max_delta"]
        for sweep, label, delta in self.deltas:
            lines.append(f"{sweep},{label},{delta:.12g}")
        return "\n".join(lines) + "\n"


# -- slices ---------------------------------------------------------------------


def _undirected_components_without(window: WeightedGraph,
                                   removed: set[str]) -> np.ndarray:
    """Component labels of the window minus a vertex set (-1 on removed)."""
    keep = np.array([v not in removed for v in window.vertex_ids])
    adj = window.undirected_support().astype(np.float64)
    adj = adj.multiply(keep[:, None]).multiply(keep[None, :]).tocsr()
    adj.eliminate_zeros()
    _, labels = csgraph.connected_components(adj, directed=False)
    return np.where(keep, labels, -1)


def _band_adjacency(window: WeightedGraph, band: set[str]) -> dict[str, list[str]]:
    ids = window.vertex_ids
    adj: dict[str, set[str]] = {v: set() for v in band}
    for v in band:
        t, w = window.row_arrays(window.index(v))
        for j, wij in zip(t, w):
            u = ids[int(j)]
            if wij > 0 and u in adj and u != v:
                adj[v].add(u)
                adj[u].add(v)
    return {v: sorted(nb) for v, nb in adj.items()}


def _band_path(adj: dict[str, list[str]], start: str,
               goal: str) -> tuple[str, ...] | None:
    """Shortest path through the band between two candidates."""
    prev: dict[str, str | None] = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v == goal:
            path = [v]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return tuple(reversed(path))
        for u in adj.get(v, ()):
            if u not in prev:
                prev[u] = v
                queue.append(u)
    return None


def _find_slice(window: WeightedGraph, ball, side_probe_labels: np.ndarray,
                side_label: int, r: int, end: str, position: str,
                end_witnesses: list[str]) -> Slice:
    """Build a separating boundary-to-boundary path through the shell band
    [r, r+2] on the given end's side, verified to cut the end off the base."""
    ids = window.vertex_ids
    mask = window.boundary_mask()
    band = set()
    for i, v in enumerate(ids):
        j = ball.index[v]
        if r <= ball.dist[j] <= r + 2 and side_probe_labels[j] == side_label:
            band.add(v)
    candidates = sorted(v for v in band if mask[window.index(v)])
    if len(candidates) < 2:
        raise SliceError("slices not disjoint or not separating: "
                         f"no boundary endpoints in the band at radius {r}")

    base = ids[0]
    adj = _band_adjacency(window, band)
    witnesses = set(end_witnesses)
    for k, start in enumerate(candidates):
        for goal in candidates[k + 1:]:
            path = _band_path(adj, start, goal)
            if path is None:
                continue
            removed = set(path)
            if base in removed or removed & witnesses:
                continue
            labels = _undirected_components_without(window, removed)
            base_lab = labels[window.index(base)]
            if all(labels[window.index(w)] != base_lab for w in end_witnesses):
                return Slice(path, end, position)
    raise SliceError("slices not disjoint or not separating: "
                     f"no separating band path at radius {r}")


def choose_slices(window: WeightedGraph, decomposition: EndDecomposition,
                  r_in: int, r_out: int) -> list[SlicePair]:
    """Per end, build the inner and outer separating slices at shell radii
    r_in and r_out.

    Requires r_in + 3 <= r_out and r_out + 2 < window radius so the two
    shell bands are disjoint and clear of the frontier.
    """
    ball = decomposition.ball
    if set(window.vertex_ids) != set(ball.ids):
        raise InputError("window and end decomposition cover different balls")
    if not (1 <= r_in and r_in + 3 <= r_out and r_out + 2 < ball.radius):
        raise SliceError("slices not disjoint or not separating: need "
                         "r_in + 3 <= r_out and r_out + 2 < radius "
                         f"(got r_in={r_in}, r_out={r_out}, R={ball.radius})")
    if not decomposition.ends:
        raise EndStructureError("no ends to slice around")

    shell = ball.dist == ball.radius
    top_labels = decomposition.labels_at[decomposition.top_probe]
    label_of_end = {name: lab for lab, name
                    in decomposition.end_label_at_top.items()}

    pairs = []
    for end in decomposition.ends:
        lab = label_of_end[end]
        witness_idx = np.nonzero(shell & (top_labels == lab))[0]
        witnesses = sorted(ball.ids[i] for i in witness_idx)
        if not witnesses:
            raise EndStructureError(f"end {end} has no shell witnesses")

        slices = {}
        for r, position in ((r_in, "inside"), (r_out, "outside")):
            from .ends import _remainder_components
            side_labels, _ = _remainder_components(ball, r - 1)
            side = {int(side_labels[ball.index[w]]) for w in witnesses}
            if len(side) != 1 or -1 in side:
                raise SliceError("slices not disjoint or not separating: "
                                 f"end {end} side ambiguous at radius {r}")
            slices[position] = _find_slice(
                window, ball, side_labels, side.pop(), r, end, position,
                witnesses)
        if set(slices["inside"].vertices) & set(slices["outside"].vertices):
            raise SliceError("slices not disjoint or not separating")
        pairs.append(SlicePair(end, slices["inside"], slices["outside"]))

    # slices of different ends must not collide either
    all_vertices = [v for p in pairs
                    for s in (p.inside, p.outside) for v in s.vertices]
    if len(all_vertices) != len(set(all_vertices)):
        raise SliceError("slices not disjoint or not separating")
    return pairs


# -- subdomains -------------------------------------------------------------------


def _induced_subdomain(window: WeightedGraph, core: list[str],
                       owns_end: str | None) -> Subdomain:
    """Core rows verbatim plus the out-neighborhood as absorbing interface."""
    core_set = set(core)
    ids = window.vertex_ids
    interface = set()
    for v in core:
        t, w = window.row_arrays(window.index(v))
        for j, wij in zip(t, w):
            u = ids[int(j)]
            if wij > 0 and u not in core_set:
                interface.add(u)
    members = [v for v in ids if v in core_set or v in interface]

    edges = []
    for v in members:
        if v in core_set:
            for u, wij in window.row(v):
                edges.append((v, u, wij))
        else:
            edges.append((v, v, 1.0))
    graph = WeightedGraph.from_edges(edges)
    return Subdomain(graph, sorted(core_set), sorted(interface), owns_end)


def build_subdomains(window: WeightedGraph,
                     slices: list[SlicePair]) -> list[Subdomain]:
    """One subdomain per end (everything beyond its inner slice) plus the
    endless central subdomain (inside all outer slices).

    Returns ends first, central last.  The added interfaces of the end
    subdomains are interior vertices of the central one and vice versa,
    except where an interface vertex was already absorbing in the window;
    this duality is asserted.
    """
    ids = window.vertex_ids
    mask = window.boundary_mask()
    subdomains = []
    for pair in slices:
        removed = set(pair.inside.vertices)
        labels = _undirected_components_without(window, removed)
        witness = pair.outside.vertices[0]
        lab = labels[window.index(witness)]
        if lab == -1:
            raise SliceError("slices not disjoint or not separating")
        wit_labels = {int(labels[window.index(v)])
                      for v in pair.outside.vertices}
        if wit_labels != {int(lab)}:
            raise SliceError(f"outer slice of {pair.end} is not contained in "
                             "one component of the inner cut")
        core = [v for i, v in enumerate(ids) if labels[i] == lab]
        subdomains.append(_induced_subdomain(window, core, pair.end))

    removed = {v for p in slices for v in p.outside.vertices}
    labels = _undirected_components_without(window, removed)
    witness = slices[0].inside.vertices[0]
    lab = labels[window.index(witness)]
    if lab == -1:
        raise SliceError("r_out too small: no endless component")
    for p in slices:
        for v in p.inside.vertices:
            if labels[window.index(v)] != lab:
                raise SliceError("r_out too small: inner slices split "
                                 "across components")
    core = [v for i, v in enumerate(ids) if labels[i] == lab]
    central = _induced_subdomain(window, core, None)
    subdomains.append(central)

    # interface duality (original absorbing vertices stay boundary everywhere)
    central_core = set(central.core)
    end_cores = set().union(*(set(s.core) for s in subdomains[:-1]))
    for s in subdomains[:-1]:
        for v in s.interface:
            if not mask[window.index(v)] and v not in central_core:
                raise InternalCheckError(
                    f"interface vertex {v} of {s.owns_end} subdomain is not "
                    "interior to the central subdomain")
    for v in central.interface:
        if not mask[window.index(v)] and v not in end_cores:
            raise InternalCheckError(
                f"central interface vertex {v} is not interior to any "
                "end subdomain")
    return subdomains


# -- alternating solve ---------------------------------------------------------------


def _solve_subdomain(sub: Subdomain, values: BoundaryData,
                     tol: float) -> dict[str, float]:
    if len(sub.graph) <= DIRECT_SIZE_LIMIT:
        return solve_direct(sub.graph, values).values
    return solve_iterative(sub.graph, values, tol=tol).values


def _subdomain_data(sub: Subdomain, window: WeightedGraph, data: BoundaryData,
                    end_map: Mapping[str, str],
                    trace_values: Mapping[str, float]) -> BoundaryData:
    """Boundary data for one sub-solve: original data on the window's
    absorbing vertices (frontier vertices score their end), current trace
    values on the added interface."""
    window_mask = window.boundary_mask()
    interface = set(sub.interface)
    values = {}
    for v in sub.graph.vertex_ids:
        if window_mask[window.index(v)]:
            if v in end_map:
                values[v] = float(data.end_values.get(end_map[v], 0.0))
            else:
                values[v] = float(data.vertex_values.get(v, 0.0))
        elif v in interface:
            values[v] = float(trace_values[v])
    return BoundaryData(values, {})


def schwarz_solve(g: LazyGraph, data: BoundaryData, radius: int,
                  r_in: int | None = None, r_out: int | None = None,
                  tol: float = 1e-8, max_sweeps: int = 50,
                  max_iter: int = 10 ** 6) -> tuple[Solution, AlternationTrace]:
    """Solve the window Dirichlet problem by alternating between the end
    subdomains and the central subdomain.

    Interfaces start at the supremum of all supplied data, so the sweep
    snapshots decrease monotonically (asserted, slack 1e-12); convergence is
    declared when consecutive sweeps differ by at most tol and the global
    window residual is within 10 tol.
    """
    data.check_finite()
    dec = detect_ends(g, default_radius_ladder(radius))
    if not dec.stable:
        raise EndStructureError("end decomposition unstable; enlarge radius")
    if not dec.ends:
        raise EndStructureError("no ends: solve the window directly instead")

    warnings = []
    cert = check_continuity_at_infinity(data, dec, epsilons=(0.1, 0.01))
    if not cert.certified:
        warnings.append("boundary data failed the continuity-at-infinity "
                        "certificate")

    trunc = truncate(g, radius)
    window = trunc.window
    end_map = trunc.end_of_frontier
    if r_in is None:
        r_in = max(1, radius // 3)
    if r_out is None:
        r_out = max(r_in + 3, (2 * radius) // 3)
    slices = choose_slices(window, dec, r_in, r_out)
    subdomains = build_subdomains(window, slices)
    end_subs, central = subdomains[:-1], subdomains[-1]

    # effective data on the window boundary (missing entries default to 0)
    bvals = boundary_value_vector(window, data, end_map)
    window_mask = window.boundary_mask()
    sup_data = float(bvals[window_mask].max()) if window_mask.any() else 0.0
    lower = float(bvals[window_mask].min()) if window_mask.any() else 0.0
    scale = max(1.0, data.bound())

    trace = AlternationTrace()
    interface_values: dict[str, float] = {
        v: sup_data for s in end_subs for v in s.interface}
    h_end_prev: dict[str, float] | None = None
    h_mid_prev: dict[str, float] | None = None
    converged = False
    sweeps = 0
    h_full: np.ndarray | None = None

    while sweeps < max_sweeps:
        sweeps += 1
        h_end: dict[str, float] = {}
        for s in end_subs:
            sub_data = _subdomain_data(s, window, data, end_map,
                                       interface_values)
            h_end.update(_solve_subdomain(s, sub_data, tol))
        trace.entries.append((f"sweep{sweeps}:ends", dict(h_end)))

        mid_data = _subdomain_data(central, window, data, end_map, h_end)
        h_mid = _solve_subdomain(central, mid_data, tol)
        trace.entries.append((f"sweep{sweeps}:core", dict(h_mid)))
        interface_values = {v: h_mid[v]
                            for s in end_subs for v in s.interface}

        trace.check_chain(CHAIN_SLACK * scale)

        delta_end = delta_mid = math.inf
        if h_end_prev is not None:
            delta_end = max(abs(h_end[v] - h_end_prev[v]) for v in h_end)
            delta_mid = max(abs(h_mid[v] - h_mid_prev[v]) for v in h_mid)
            trace.deltas.extend([(sweeps, "ends", delta_end),
                                 (sweeps, "core", delta_mid)])

        # assemble the global candidate and test it
        h_full = bvals.copy()
        for v, val in {**h_end, **h_mid}.items():
            i = window.index(v)
            if not window_mask[i]:
                h_full[i] = val
        res = residual_of(window, h_full)
        if max(delta_end, delta_mid) <= tol and res <= 10 * tol:
            converged = True
            break
        h_end_prev, h_mid_prev = h_end, h_mid

    if not converged:
        last = 0.0 if h_end_prev is None else max(delta_end, delta_mid)
        raise ConvergenceError("no convergence within sweep budget", last)

    values = {v: float(h_full[i]) for i, v in enumerate(window.vertex_ids)}
    res = residual_of(window, h_full)
    if min(values.values()) < lower - CHAIN_SLACK * scale:
        raise InternalCheckError("schwarz solution fell below the data minimum")

    meta = {"tol": tol, "sweeps": sweeps, "radius": radius,
            "r_in": r_in, "r_out": r_out,
            "ends": list(dec.ends), "continuity_certified": cert.certified,
            "warnings": warnings}
    solution = Solution(values, "schwarz", sweeps, res, meta)
    return solution, trace
