"""Finite weighted directed graphs with unit row sums.

A graph is a finite vertex set with a sparse non-negative weight function
whose rows sum to 1, i.e. a Markov transition kernel.  Vertices whose whole
row sits on the self-loop are absorbing; they form the (Kiselman) boundary
and everything else is the interior.  This module owns the representation,
validation, the structural queries (neighborhoods, components, connectivity,
quasi-reversibility) and the sparse kernel algebra used by the solvers.

Vertex identity is an opaque string.  Vertices keep insertion order;
set-valued results are returned sorted by id so every operation is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import InputError, VertexNotFoundError

VertexId = str

#: rows are accepted when |sum - 1| <= WEIGHT_TOL (file inputs carry round-off)
WEIGHT_TOL = 1e-9
#: a vertex is absorbing when its self-loop weight is >= 1 - BOUNDARY_TOL
BOUNDARY_TOL = 1e-9


class WeightedGraph:
    """Immutable weighted directed graph backed by CSR-style arrays.

    Construction goes through :meth:`from_edges` (or the file loader); after
    that every operation is a pure read, so instances are safe to share
    between threads.  Stored zero weights are rejected at construction:
    absence of an entry is the only representation of "no edge".
    """

    __slots__ = ("_ids", "_index", "_indptr", "_targets", "_weights", "_csr",
                 "_boundary_mask")

    def __init__(self, ids: list[str], indptr: np.ndarray, targets: np.ndarray,
                 weights: np.ndarray):
        self._ids = tuple(ids)
        self._index = {v: i for i, v in enumerate(ids)}
        self._indptr = indptr
        self._targets = targets
        self._weights = weights
        self._csr: sp.csr_matrix | None = None
        self._boundary_mask: np.ndarray | None = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str, float]]) -> "WeightedGraph":
        """Build from (from, to, weight) triples; vertices are declared
        implicitly in order of first appearance.  Duplicate (from, to) pairs
        and stored zeros are rejected."""
        ids: list[str] = []
        index: dict[str, int] = {}
        rows: list[list[tuple[int, float]]] = []

        def intern(v: str) -> int:
            i = index.get(v)
            if i is None:
                if not v or any(c.isspace() for c in v):
                    raise InputError(f"invalid vertex id {v!r}")
                i = len(ids)
                index[v] = i
                ids.append(v)
                rows.append([])
            return i

        seen: set[tuple[int, int]] = set()
        for u, v, w in edges:
            iu, iv = intern(u), intern(v)
            if (iu, iv) in seen:
                raise InputError(f"duplicate edge {u} -> {v}")
            seen.add((iu, iv))
            w = float(w)
            if w == 0.0:
                raise InputError(f"stored zero weight on edge {u} -> {v}")
            rows[iu].append((iv, w))

        indptr = np.zeros(len(ids) + 1, dtype=np.int64)
        for i, row in enumerate(rows):
            indptr[i + 1] = indptr[i] + len(row)
        targets = np.empty(int(indptr[-1]), dtype=np.int64)
        weights = np.empty(int(indptr[-1]), dtype=np.float64)
        pos = 0
        for row in rows:
            for t, w in row:
                targets[pos] = t
                weights[pos] = w
                pos += 1
        return cls(ids, indptr, targets, weights)

    @classmethod
    def from_arrays(cls, ids: list[str], indptr: np.ndarray, targets: np.ndarray,
                    weights: np.ndarray) -> "WeightedGraph":
        """Trusted fast path for programmatic construction (truncations)."""
        return cls(ids, indptr, targets, weights)

    # -- basic queries -----------------------------------------------------

    @property
    def vertex_ids(self) -> tuple[str, ...]:
        return self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, v: str) -> bool:
        return v in self._index

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise VertexNotFoundError(v) from None

    def row(self, v: str) -> list[tuple[str, float]]:
        i = self.index(v)
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return [(self._ids[t], float(w)) for t, w in
                zip(self._targets[lo:hi], self._weights[lo:hi])]

    def row_arrays(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Target-index and weight views of row i (no copy)."""
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return self._targets[lo:hi], self._weights[lo:hi]

    def weight(self, u: str, v: str) -> float:
        iu, iv = self.index(u), self.index(v)
        lo, hi = self._indptr[iu], self._indptr[iu + 1]
        hits = np.nonzero(self._targets[lo:hi] == iv)[0]
        return float(self._weights[lo + hits[0]]) if hits.size else 0.0

    def to_matrix(self) -> sp.csr_matrix:
        """The weight function as a scipy CSR matrix in vertex order."""
        if self._csr is None:
            n = len(self._ids)
            self._csr = sp.csr_matrix(
                (self._weights.copy(), self._targets.astype(np.int32),
                 self._indptr.copy()), shape=(n, n))
        return self._csr

    def row_index_of_entries(self) -> np.ndarray:
        """For each stored entry, the index of the row it belongs to."""
        n = len(self._ids)
        counts = np.diff(self._indptr)
        return np.repeat(np.arange(n, dtype=np.int64), counts)

    def self_loop_weights(self) -> np.ndarray:
        rows = self.row_index_of_entries()
        out = np.zeros(len(self._ids))
        hit = rows == self._targets
        out[rows[hit]] = self._weights[hit]
        return out

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask of absorbing vertices (self-loop weight ~ 1)."""
        if self._boundary_mask is None:
            self._boundary_mask = self.self_loop_weights() >= 1.0 - BOUNDARY_TOL
        return self._boundary_mask

    def positive_support(self) -> sp.csr_matrix:
        """0/1 matrix of strictly positive weights."""
        a = self.to_matrix().copy()
        a.data = (a.data > 0).astype(np.int8)
        a.eliminate_zeros()
        return a

    def undirected_support(self) -> sp.csr_matrix:
        """Symmetrized positive support with the diagonal removed."""
        a = self.positive_support()
        u = a.maximum(a.T).tolil()
        u.setdiag(0)
        return u.tocsr()


# -- validation ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def format(self) -> str:
        return f"VIOLATION {self.kind} {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def format_lines(self) -> list[str]:
        return [v.format() for v in self.violations]


def validate(graph: WeightedGraph) -> ValidationReport:
    """Check the weight-function axioms; never raises.

    Reports negative weights, rows whose sum strays from 1 beyond the
    tolerance, and dangling endpoints (vertices that appear only as edge
    targets and have no row of their own).
    """
    report = ValidationReport()
    ids = graph.vertex_ids
    for i, v in enumerate(ids):
        t, w = graph.row_arrays(i)
        for j, wij in zip(t, w):
            if wij < 0:
                report.violations.append(Violation(
                    "negative-weight", f"{v} -> {ids[j]} weight {wij:.12g}"))
        if t.size == 0:
            report.violations.append(Violation("dangling-endpoint", v))
            continue
        s = float(w.sum())
        if abs(s - 1.0) > WEIGHT_TOL:
            report.violations.append(Violation(
                "row-sum", f"row sum of {v} is {s:.12g}"))
    return report


# -- boundary, neighborhoods, components -----------------------------------

def kiselman_boundary(graph: WeightedGraph) -> list[str]:
    """Vertices whose entire row sits on the self-loop (absorbing states)."""
    mask = graph.boundary_mask()
    return sorted(v for i, v in enumerate(graph.vertex_ids) if mask[i])


def interior(graph: WeightedGraph) -> list[str]:
    mask = graph.boundary_mask()
    return sorted(v for i, v in enumerate(graph.vertex_ids) if not mask[i])


def neighborhood(graph: WeightedGraph, a: str, k: int) -> list[str]:
    """The k-step forward image of {a}: N_0 = {a} and N_{k+1} is the set of
    positive-weight successors of N_k."""
    if k < 0:
        raise InputError(f"neighborhood order must be >= 0, got {k}")
    current = {graph.index(a)}
    for _ in range(k):
        nxt: set[int] = set()
        for i in current:
            t, w = graph.row_arrays(i)
            nxt.update(int(j) for j, wij in zip(t, w) if wij > 0)
        current = nxt
    return sorted(graph.vertex_ids[i] for i in current)


def component(graph: WeightedGraph, a: str) -> list[str]:
    """Union of all forward neighborhoods of a (a plus everything reachable
    along positive-weight edges)."""
    return sorted(graph.vertex_ids[i]
                  for i in _forward_closure(graph, graph.index(a)))


def _forward_closure(graph: WeightedGraph, start: int) -> set[int]:
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


def _interior_component_labels(graph: WeightedGraph) -> tuple[int, np.ndarray]:
    """Undirected component labels over interior vertices only; boundary
    vertices get label -1."""
    mask = graph.boundary_mask()
    u = graph.undirected_support().astype(np.float64)
    # cut edges touching the boundary, then label
    keep = ~mask
    u = u.multiply(keep[:, None]).multiply(keep[None, :]).tocsr()
    u.eliminate_zeros()
    ncomp, labels = csgraph.connected_components(u, directed=False)
    labels = labels.copy()
    labels[mask] = -1
    # relabel interior components densely in order of first appearance
    seen: dict[int, int] = {}
    for i in np.nonzero(keep)[0]:
        lab = int(labels[i])
        if lab not in seen:
            seen[lab] = len(seen)
        labels[i] = seen[lab]
    return len(seen), labels


def is_connected(graph: WeightedGraph) -> bool:
    """True when every interior vertex forward-reaches the whole vertex set
    (vacuously true with empty interior)."""
    mask = graph.boundary_mask()
    n = len(graph)
    interior_idx = np.nonzero(~mask)[0]
    if interior_idx.size == 0:
        return True
    qr, _ = is_quasi_reversible(graph)
    if qr:
        # interior support is symmetric: the definition reduces to a single
        # undirected interior component whose out-edges cover every vertex
        ncomp, labels = _interior_component_labels(graph)
        if ncomp != 1:
            return False
        reached = set(int(i) for i in interior_idx)
        for i in interior_idx:
            t, w = graph.row_arrays(int(i))
            reached.update(int(j) for j, wij in zip(t, w) if wij > 0)
        return len(reached) == n
    return all(len(_forward_closure(graph, int(i))) == n for i in interior_idx)


def is_boundary_connected(graph: WeightedGraph) -> bool:
    """True when every interior vertex forward-reaches some absorbing
    vertex (vacuously true with empty interior)."""
    mask = graph.boundary_mask()
    interior_idx = np.nonzero(~mask)[0]
    if interior_idx.size == 0:
        return True
    if not mask.any():
        return False
    qr, _ = is_quasi_reversible(graph)
    if qr:
        ncomp, labels = _interior_component_labels(graph)
        touches = np.zeros(ncomp, dtype=bool)
        for i in interior_idx:
            t, w = graph.row_arrays(int(i))
            if any(mask[int(j)] and wij > 0 for j, wij in zip(t, w)):
                touches[labels[int(i)]] = True
        return bool(touches.all())
    return all(any(mask[j] for j in _forward_closure(graph, int(i)))
               for i in interior_idx)


def is_quasi_reversible(graph: WeightedGraph) -> tuple[bool, list[tuple[str, str]]]:
    """Check that every directed edge is reciprocated or points into an
    absorbing vertex; returns (verdict, offending edges)."""
    mask = graph.boundary_mask()
    a = graph.positive_support()
    unreciprocated = a - a.minimum(a.T.tocsr())
    unreciprocated.eliminate_zeros()
    coo = unreciprocated.tocoo()
    ids = graph.vertex_ids
    violations = sorted(
        (ids[i], ids[j]) for i, j in zip(coo.row, coo.col)
        if i != j and not mask[j])
    return (not violations), violations


# -- sparse kernel algebra ---------------------------------------------------

class StructureFunction:
    """Sparse real kernel on vertex pairs; every row has finite support.

    Unlike the graph's weight function, rows need not be stochastic: these
    carry iterated transition kernels and test fixtures.
    """

    def __init__(self, entries: Mapping[str, Mapping[str, float]]):
        rows = {x: {y: float(w) for y, w in row.items() if w != 0.0}
                for x, row in entries.items()}
        self._rows = {x: row for x, row in rows.items() if row}

    @classmethod
    def identity(cls, ids: Iterable[str]) -> "StructureFunction":
        return cls({v: {v: 1.0} for v in ids})

    @classmethod
    def from_graph(cls, graph: WeightedGraph) -> "StructureFunction":
        return cls({v: dict(graph.row(v)) for v in graph.vertex_ids})

    def value(self, x: str, y: str) -> float:
        return self._rows.get(x, {}).get(y, 0.0)

    def row(self, x: str) -> dict[str, float]:
        return dict(self._rows.get(x, {}))

    def rows(self) -> Iterator[tuple[str, dict[str, float]]]:
        for x in sorted(self._rows):
            yield x, dict(self._rows[x])

    def row_sums(self) -> dict[str, float]:
        return {x: sum(row.values()) for x, row in self._rows.items()}

    def support(self) -> list[tuple[str, str]]:
        return sorted((x, y) for x, row in self._rows.items() for y in row)


def compose(f: StructureFunction, g: StructureFunction) -> StructureFunction:
    """Row-by-column product of sparse kernels:
    (f*g)(x, y) = sum over z of f(x, z) g(z, y)."""
    out: dict[str, dict[str, float]] = {}
    for x, frow in f._rows.items():
        acc: dict[str, float] = {}
        for z, fxz in frow.items():
            grow = g._rows.get(z)
            if not grow:
                continue
            for y, gzy in grow.items():
                acc[y] = acc.get(y, 0.0) + fxz * gzy
        if acc:
            out[x] = acc
    return StructureFunction(out)


def kernel_power(f: StructureFunction, k: int, ids: Iterable[str]) -> StructureFunction:
    """k-fold composition of f with itself; k = 0 gives the identity on ids."""
    if k < 0:
        raise InputError(f"kernel power must be >= 0, got {k}")
    result = StructureFunction.identity(ids)
    for _ in range(k):
        result = compose(result, f)
    return result


# -- file format -------------------------------------------------------------

def parse_graph(lines: Iterable[str]) -> WeightedGraph:
    """Parse the line-oriented edge format: `edge <from> <to> <weight>`,
    '#' comments and blank lines ignored."""
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "edge" or len(parts) != 4:
            raise InputError(f"line {lineno}: expected 'edge <from> <to> <weight>'")
        try:
            w = float(parts[3])
        except ValueError:
            raise InputError(f"line {lineno}: bad weight {parts[3]!r}") from None
        edges.append((parts[1], parts[2], w))
    if not edges:
        raise InputError("graph file declares no edges")
    return WeightedGraph.from_edges(edges)


def load_graph(path: str) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh)
