"""Finite windows onto infinite graphs and their ends.

An infinite locally finite graph is presented procedurally (base vertex plus
a neighbor enumerator).  A truncation is the ball of a given radius around
the base with the frontier converted to absorbing vertices, each tagged by
the end it leads to.  Ends are detected by removing balls of increasing
probe radii and threading the undirected components of what remains; the
thread count is declared stable when the top two probes agree.

Vertices are discovered through out-edges in both directions (an edge
discovered into a vertex also makes that vertex reachable), which covers the
undirected ball on quasi-reversible graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csgraph
import scipy.sparse as sp

from .errors import EndStructureError, InputError
from .graph_core import WeightedGraph, WEIGHT_TOL


class LazyGraph:
    """Procedural presentation of a (possibly infinite) locally finite graph.

    ``neighbors(v)`` must deterministically return the finite out-row of v
    as (target, weight) pairs, non-negative and summing to 1.  Instances
    cache the balls they have been asked for; the neighbor procedure must be
    pure.
    """

    def __init__(self, base: str, neighbors: Callable[[str], Sequence[tuple[str, float]]],
                 name: str = "lazy"):
        self.base = base
        self.neighbors = neighbors
        self.name = name
        self._ball_cache: dict[int, "_Ball"] = {}

    def row(self, v: str) -> list[tuple[str, float]]:
        row = list(self.neighbors(v))
        s = sum(w for _, w in row)
        if any(w < 0 for _, w in row) or abs(s - 1.0) > WEIGHT_TOL:
            raise InputError(f"invalid lazy row at {v}")
        return row

    def ball(self, radius: int) -> "_Ball":
        if radius not in self._ball_cache:
            self._ball_cache[radius] = _build_ball(self, radius)
        return self._ball_cache[radius]


@dataclass
class _Ball:
    """Radius-R window: ids in BFS discovery order, graph distances from the
    base, CSR rows restricted to the window, and an escape flag per vertex
    (some out-edge pointed outside the window)."""
    base: str
    radius: int
    ids: list[str]
    index: dict[str, int]
    dist: np.ndarray
    indptr: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    escapes: np.ndarray

    _adj_cache: sp.csr_matrix | None = None
    _id_rank_cache: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def undirected_adjacency(self) -> sp.csr_matrix:
        if self._adj_cache is None:
            n = len(self.ids)
            rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
            keep = rows != self.targets
            a = sp.csr_matrix(
                (np.ones(int(keep.sum()), dtype=np.float64),
                 (rows[keep], self.targets[keep])), shape=(n, n))
            self._adj_cache = a.maximum(a.T)
        return self._adj_cache

    def id_rank(self) -> np.ndarray:
        """rank[i] = position of vertex i in id-sorted order."""
        if self._id_rank_cache is None:
            order = np.argsort(np.array(self.ids))
            rank = np.empty(len(self.ids), dtype=np.int64)
            rank[order] = np.arange(len(self.ids))
            self._id_rank_cache = rank
        return self._id_rank_cache


def _build_ball(g: LazyGraph, radius: int) -> _Ball:
    if radius < 1:
        raise InputError(f"radius must be >= 1, got {radius}")
    ids = [g.base]
    index = {g.base: 0}
    dists = [0]
    indptr = [0]
    targets: list[int] = []
    weights: list[float] = []
    escapes: list[bool] = []
    head = 0
    while head < len(ids):
        v = ids[head]
        d = dists[head]
        row = list(g.neighbors(v))
        s = 0.0
        esc = False
        expand = d < radius
        for t, w in row:
            s += w
            if w < 0:
                raise InputError(f"invalid lazy row at {v}")
            j = index.get(t)
            if j is None:
                if expand:
                    j = len(ids)
                    index[t] = j
                    ids.append(t)
                    dists.append(d + 1)
                else:
                    esc = True
                    continue
            targets.append(j)
            weights.append(w)
        if abs(s - 1.0) > WEIGHT_TOL:
            raise InputError(f"invalid lazy row at {v}")
        escapes.append(esc)
        indptr.append(len(targets))
        head += 1
    return _Ball(g.base, radius, ids, index,
                 np.array(dists, dtype=np.int32),
                 np.array(indptr, dtype=np.int64),
                 np.array(targets, dtype=np.int64),
                 np.array(weights, dtype=np.float64),
                 np.array(escapes, dtype=bool))


# -- truncation ---------------------------------------------------------------


@dataclass
class Truncation:
    """Finite window of a lazy graph: the ball as a weighted graph with
    frontier vertices made absorbing and tagged by end membership."""
    window: WeightedGraph
    frontier: list[str]
    end_of_frontier: dict[str, str]
    R: int
    base: str
    ball: _Ball = field(repr=False)

    def distance_of(self, v: str) -> int:
        return int(self.ball.dist[self.ball.index[v]])


def truncate(g: LazyGraph, R: int) -> Truncation:
    """Cut the radius-R ball around the base out of a lazy graph.

    Vertices at distance exactly R whose out-rows leave the window become
    absorbing frontier vertices; every other row is preserved verbatim.
    Frontier vertices are tagged with the end (component of the complement
    of the widest usable probe ball) they sit in.
    """
    ball = g.ball(R)
    n = len(ball)
    frontier_mask = (ball.dist == R) & ball.escapes

    # keep every non-frontier row verbatim, replace frontier rows by a
    # unit self-loop (vectorized: rebuild the entry arrays grouped by row)
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(ball.indptr))
    keep = ~frontier_mask[rows]
    fidx = np.nonzero(frontier_mask)[0]
    all_rows = np.concatenate([rows[keep], fidx])
    all_targets = np.concatenate([ball.targets[keep], fidx])
    all_weights = np.concatenate([ball.weights[keep], np.ones(fidx.size)])
    order = np.argsort(all_rows, kind="stable")
    counts = np.bincount(all_rows, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])

    window = WeightedGraph.from_arrays(
        list(ball.ids), indptr, all_targets[order], all_weights[order])

    frontier = sorted(ball.ids[i] for i in fidx)
    # probe capped at R-2: at R-1, absorbing leaves hanging off the last
    # interior shell form spurious shell-touching pockets
    probe = max(0, min((5 * R) // 6, R - 2))
    tags = _frontier_end_tags(ball, probe, frontier_mask)
    return Truncation(window, frontier, tags, R, g.base, ball)


def _remainder_components(ball: _Ball, probe: int) -> tuple[np.ndarray, list[int]]:
    """Label undirected components of {dist > probe}; vertices inside the
    probe ball get label -1.  Returns (labels, shell-touching labels sorted
    by smallest member id)."""
    outside = ball.dist > probe
    adj = ball.undirected_adjacency()
    adj = adj.multiply(outside[:, None]).multiply(outside[None, :]).tocsr()
    adj.eliminate_zeros()
    _, raw = csgraph.connected_components(adj, directed=False)
    labels = np.where(outside, raw, -1)

    shell = ball.dist == ball.radius
    touching = np.unique(labels[shell & outside])
    # deterministic order: by the smallest vertex id in each component
    rank = ball.id_rank()
    best_rank = np.full(int(labels.max()) + 2, np.iinfo(np.int64).max)
    sel = np.nonzero(outside)[0]
    np.minimum.at(best_rank, labels[sel], rank[sel])
    ordered = [int(lab) for lab in
               sorted(touching, key=lambda lab: best_rank[int(lab)])]
    return labels, ordered


def _frontier_end_tags(ball: _Ball, probe: int,
                       frontier_mask: np.ndarray) -> dict[str, str]:
    if not frontier_mask.any():
        return {}
    labels, ordered = _remainder_components(ball, probe)
    name_of = {lab: f"end-{k}" for k, lab in enumerate(ordered)}
    tags = {}
    for i in np.nonzero(frontier_mask)[0]:
        lab = int(labels[i])
        tags[ball.ids[i]] = name_of.get(lab, f"end-?{lab}")
    return tags


# -- end detection --------------------------------------------------------------


@dataclass
class EndDecomposition:
    """Threads of sphere-complement components across a probe ladder.

    ``ends`` lists one id per thread that survives to the top probe and
    touches the outer shell; ``stable`` records whether the top two probes
    agree (bijective component matching).  The witness structures keep the
    per-probe component labels for classification and diagnostics.
    """
    ends: list[str]
    stable: bool
    probe_radii: list[int]
    radius: int
    base: str
    ball: _Ball = field(repr=False)
    labels_at: dict[int, np.ndarray] = field(repr=False, default_factory=dict)
    shell_labels_at: dict[int, list[int]] = field(repr=False, default_factory=dict)
    end_label_at_top: dict[int, str] = field(default_factory=dict)
    frontier_sizes: dict[str, int] = field(default_factory=dict)

    @property
    def top_probe(self) -> int:
        return self.probe_radii[-1]

    def end_of(self, v: str) -> str | None:
        """End id of the top-probe component containing v, if any."""
        i = self.ball.index.get(v)
        if i is None:
            return None
        lab = int(self.labels_at[self.top_probe][i])
        return self.end_label_at_top.get(lab)

    def format_lines(self) -> list[str]:
        return [f"end {e} frontier-size {self.frontier_sizes[e]}"
                for e in self.ends]


def default_radius_ladder(R: int) -> list[int]:
    """Nested probe ladder (R/2, 2R/3, 5R/6, R), deduplicated, with probes
    capped at R-2 to keep absorbing-leaf pockets off the outer shell."""
    probes = {max(1, min(p, R - 2))
              for p in (R // 2, (2 * R) // 3, (5 * R) // 6)}
    while len(probes) < 2 and min(probes) > 1:
        probes.add(min(probes) - 1)
    ladder = sorted(probes | {R})
    if len(ladder) < 3:
        raise InputError(f"radius {R} is too small for end detection")
    return ladder


def detect_ends(g: LazyGraph, radii: Sequence[int]) -> EndDecomposition:
    """Detect ends by probing: the largest radius is the working universe,
    the rest are probe radii.

    For each probe r the undirected components of {dist > r} within the
    universe ball are computed; components containing outer-shell vertices
    are threaded across probes by inclusion.  The decomposition is stable
    when the top two probes match bijectively; otherwise the (provisional)
    top components are still reported and ``stable`` is False.
    """
    radii = sorted(set(int(r) for r in radii))
    if len(radii) < 3:
        raise InputError("end detection needs at least 3 radii")
    if radii[0] < 1:
        raise InputError("radii must be >= 1")
    universe = radii[-1]
    probes = radii[:-1]
    ball = g.ball(universe)

    labels_at: dict[int, np.ndarray] = {}
    shell_labels: dict[int, list[int]] = {}
    for r in probes:
        labels, ordered = _remainder_components(ball, r)
        labels_at[r] = labels
        shell_labels[r] = ordered

    top = probes[-1]
    prev = probes[-2]
    # map each top shell component into its enclosing prev component
    # (vectorized over (top label, prev label) pairs)
    stable = len(shell_labels[top]) == len(shell_labels[prev])
    sel = labels_at[top] >= 0
    tl = labels_at[top][sel].astype(np.int64)
    pl = labels_at[prev][sel].astype(np.int64)
    mod = int(pl.max()) + 2 if pl.size else 1
    pair_keys = np.unique(tl * mod + pl)
    pair_top, pair_prev = pair_keys // mod, pair_keys % mod
    images_per_top, image_counts = np.unique(pair_top, return_counts=True)
    image_of = dict(zip(images_per_top.tolist(),
                        pair_prev[np.searchsorted(pair_top, images_per_top)].tolist()))
    count_of = dict(zip(images_per_top.tolist(), image_counts.tolist()))
    if stable:
        covered = set()
        for lab in shell_labels[top]:
            if count_of.get(lab, 0) != 1:
                stable = False
                break
            covered.add(image_of[lab])
        if stable and (len(covered) != len(shell_labels[top])
                       or covered != set(shell_labels[prev])):
            stable = False

    names = {lab: f"end-{k}" for k, lab in enumerate(shell_labels[top])}
    shell = ball.dist == universe
    shell_labs, shell_counts = np.unique(labels_at[top][shell], return_counts=True)
    count_at_shell = dict(zip(shell_labs.tolist(), shell_counts.tolist()))
    sizes = {name: int(count_at_shell.get(lab, 0))
             for lab, name in names.items()}

    return EndDecomposition(
        ends=[names[lab] for lab in shell_labels[top]],
        stable=stable, probe_radii=probes, radius=universe,
        base=g.base, ball=ball, labels_at=labels_at,
        shell_labels_at=shell_labels, end_label_at_top=names,
        frontier_sizes=sizes)


def classify_sequence(g: LazyGraph, decomposition: EndDecomposition,
                      seq: Sequence[str]) -> str:
    """Decide which end (if any) eventually contains the tail of seq.

    For every probe radius the suffix after the last in-ball entry must be
    non-empty and sit inside a single component, and the components must
    thread to one top-probe end; otherwise the sequence is "divergent".
    Entries outside the working universe raise "needs larger radii".
    """
    if not seq:
        return "divergent"
    ball = decomposition.ball
    idxs = []
    for v in seq:
        i = ball.index.get(v)
        if i is None:
            raise EndStructureError("needs larger radii")
        idxs.append(i)

    candidate: str | None = None
    for r in decomposition.probe_radii:
        inside = [k for k, i in enumerate(idxs) if ball.dist[i] <= r]
        start = (inside[-1] + 1) if inside else 0
        tail = idxs[start:]
        if not tail:
            return "divergent"
        labels = decomposition.labels_at[r]
        labs = {int(labels[i]) for i in tail}
        if len(labs) != 1:
            return "divergent"
    # single component at every probe: name it via the top probe
    top_lab = int(decomposition.labels_at[decomposition.top_probe][idxs[-1]])
    name = decomposition.end_label_at_top.get(top_lab)
    return name if name is not None else "divergent"


# -- continuity at infinity -----------------------------------------------------


@dataclass(frozen=True)
class ContinuityCheck:
    end: str
    epsilon: float
    certified: bool
    violators_inside: int
    violators_outer: int


@dataclass
class ContinuityReport:
    checks: list[ContinuityCheck]

    @property
    def certified(self) -> bool:
        return all(c.certified for c in self.checks)


def check_continuity_at_infinity(boundary_data, decomposition: EndDecomposition,
                                 epsilons: Sequence[float]) -> ContinuityReport:
    """Truncation-level certificate that boundary data converges to each
    end's value: for every epsilon, absorbing vertices violating
    |f(x) - f(end)| <= epsilon must sit strictly inside the window, never on
    the outermost shell region leading to the end.

    ``boundary_data`` needs ``vertex_values`` and ``end_values`` mappings
    (duck-typed to avoid a dependency on the solver layer).
    """
    ball = decomposition.ball
    vertex_values: Mapping[str, float] = boundary_data.vertex_values
    end_values: Mapping[str, float] = boundary_data.end_values
    top = decomposition.top_probe
    labels = decomposition.labels_at[top]
    label_of_end = {name: lab for lab, name
                    in decomposition.end_label_at_top.items()}

    checks = []
    for eps in epsilons:
        if eps <= 0:
            raise InputError(f"epsilon must be positive, got {eps}")
        for end in decomposition.ends:
            f_end = float(end_values.get(end, 0.0))
            lab = label_of_end[end]
            inside = outer = 0
            for v, value in vertex_values.items():
                i = ball.index.get(v)
                if i is None:
                    continue
                if abs(float(value) - f_end) <= eps:
                    continue
                d = int(ball.dist[i])
                if d >= ball.radius - 1 and int(labels[i]) == lab:
                    outer += 1
                else:
                    inside += 1
            checks.append(ContinuityCheck(end, float(eps), outer == 0,
                                          inside, outer))
    return ContinuityReport(checks)
