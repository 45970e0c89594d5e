"""Shared fixtures: small canonical graphs and seeded random generators."""

import math

import numpy as np
import pytest

from graph_potential import BoundaryData, WeightedGraph, solve_direct
from graph_potential.ends import LazyGraph


@pytest.fixture
def path_graph():
    """a - b - c with absorbing endpoints and a fair interior split."""
    return WeightedGraph.from_edges([
        ("a", "a", 1.0), ("b", "a", 0.5), ("b", "c", 0.5), ("c", "c", 1.0)])


@pytest.fixture
def path_data():
    return BoundaryData({"a": 0.0, "c": 1.0})


def finite_lazy(graph: WeightedGraph, base: str) -> LazyGraph:
    """Wrap a finite graph as a lazy one (for truncation edge cases)."""
    return LazyGraph(base, lambda v: graph.row(v), name="finite")


def random_qr_graph(rng: np.random.Generator, max_interior: int = 30,
                    max_boundary: int = 6) -> WeightedGraph:
    """Random connected quasi-reversible graph with nonempty absorbing
    boundary: an interior random tree plus chords, every boundary vertex
    hanging off an interior host, random positive weights per row."""
    n_i = int(rng.integers(2, max_interior + 1))
    # at least two boundary vertices, else every harmonic function is constant
    n_b = int(rng.integers(2, max_boundary + 1))
    interior = [f"v{i}" for i in range(n_i)]
    boundary = [f"b{j}" for j in range(n_b)]

    nbrs = {v: set() for v in interior}
    for i in range(1, n_i):
        p = int(rng.integers(0, i))
        nbrs[interior[i]].add(interior[p])
        nbrs[interior[p]].add(interior[i])
    for _ in range(int(rng.integers(0, n_i))):
        i, j = rng.integers(0, n_i, size=2)
        if i != j:
            nbrs[interior[int(i)]].add(interior[int(j)])
            nbrs[interior[int(j)]].add(interior[int(i)])

    hosts = {b: interior[int(rng.integers(0, n_i))] for b in boundary}

    edges = []
    for v in interior:
        targets = sorted(nbrs[v]) + sorted(b for b, h in hosts.items() if h == v)
        weights = rng.uniform(0.2, 1.0, size=len(targets))
        weights /= weights.sum()
        edges.extend((v, t, float(w)) for t, w in zip(targets, weights))
    for b in boundary:
        edges.append((b, b, 1.0))
    return WeightedGraph.from_edges(edges)


def random_subharmonic(rng: np.random.Generator, graph: WeightedGraph,
                       max_parts: int = 4) -> dict[str, float]:
    """Pointwise max of a few harmonic functions solved from random
    boundary data; subharmonic by construction and non-constant with
    overwhelming probability (resampled otherwise)."""
    boundary = [v for i, v in enumerate(graph.vertex_ids)
                if graph.boundary_mask()[i]]
    for _ in range(20):
        parts = []
        for _ in range(int(rng.integers(1, max_parts + 1))):
            data = BoundaryData(
                {b: float(rng.uniform(0.0, 1.0)) for b in boundary})
            parts.append(solve_direct(graph, data).values)
        f = {v: max(p[v] for p in parts) for v in graph.vertex_ids}
        values = list(f.values())
        if max(values) - min(values) > 1e-6:
            return f
    raise AssertionError("could not build a non-constant subharmonic function")
