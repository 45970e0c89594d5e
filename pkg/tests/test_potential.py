import math

import numpy as np
import pytest

from conftest import random_qr_graph, random_subharmonic
from graph_potential import (check_maximum_principle, extend_by_zero,
                             is_harmonic, is_subharmonic, k_step_average,
                             kiselman_boundary, laplacian,
                             maximally_increasing_path, solve_direct,
                             BoundaryData, WeightedGraph)
from graph_potential.errors import InputError, StalledPathError
from graph_potential.ends import truncate
from graph_potential.families import half_plane
from graph_potential.potential import (check_increasing_path, laplacian_all,
                                       neighbor_average,
                                       parse_vertex_function)


def height_function(window) -> dict[str, float]:
    return {v: float(v.split(",")[1]) for v in window.vertex_ids}


def test_laplacian_height_is_harmonic_on_half_plane():
    window = truncate(half_plane(), 5).window
    f = height_function(window)
    for v in window.vertex_ids:
        assert laplacian(window, f, v) == 0.0
    assert is_harmonic(window, f, tol=0.0)


def test_laplacian_constant(path_graph):
    f = {v: 3.25 for v in path_graph.vertex_ids}
    for v in path_graph.vertex_ids:
        assert laplacian(path_graph, f, v) == 0.0


def test_laplacian_path_hand_value(path_graph):
    # hand evaluation: (1/2)(0 - 0) + (1/2)(1 - 0) = 1/2
    f = {"a": 0.0, "b": 0.0, "c": 1.0}
    assert laplacian(path_graph, f, "b") == pytest.approx(0.5, abs=1e-15)
    assert laplacian(path_graph, f, "a") == 0.0


def test_laplacian_linearity():
    rng = np.random.default_rng(3)
    g = random_qr_graph(rng)
    f = {v: float(rng.normal()) for v in g.vertex_ids}
    h = {v: float(rng.normal()) for v in g.vertex_ids}
    a, b = 1.7, -0.4
    combo = {v: a * f[v] + b * h[v] for v in g.vertex_ids}
    lf, lh, lc = laplacian_all(g, f), laplacian_all(g, h), laplacian_all(g, combo)
    for v in g.vertex_ids:
        assert abs(lc[v] - (a * lf[v] + b * lh[v])) <= 1e-12


def test_mean_value_equivalence():
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = random_qr_graph(rng)
        f = {v: float(rng.uniform(-1, 1)) for v in g.vertex_ids}
        for v in g.vertex_ids:
            gap = neighbor_average(g, f, v) - f[v]
            assert abs(gap - laplacian(g, f, v)) <= 1e-12


def test_max_of_harmonics_subharmonic():
    rng = np.random.default_rng(7)
    g = random_qr_graph(rng)
    f = random_subharmonic(rng, g)
    assert is_subharmonic(g, f, tol=1e-12)


def test_not_subharmonic_spike(path_graph):
    f = {"a": 0.0, "b": 1.0, "c": 0.0}
    assert laplacian(path_graph, f, "b") == pytest.approx(-1.0)
    assert not is_subharmonic(path_graph, f, tol=1e-9)


def test_harmonic_iff_both_signs_subharmonic():
    rng = np.random.default_rng(13)
    g = random_qr_graph(rng)
    boundary = kiselman_boundary(g)
    h = solve_direct(g, BoundaryData(
        {b: float(rng.uniform()) for b in boundary})).values
    neg = {v: -x for v, x in h.items()}
    tol = 1e-9
    assert is_harmonic(g, h, tol)
    assert is_subharmonic(g, h, tol) and is_subharmonic(g, neg, tol)


def test_k_step_average_identity_and_one_step(path_graph):
    f = {"a": 0.0, "b": 0.0, "c": 1.0}
    assert k_step_average(path_graph, f, 0) == f
    assert k_step_average(path_graph, f, 1) == {"a": 0.0, "b": 0.5, "c": 1.0}
    with pytest.raises(InputError):
        k_step_average(path_graph, f, -1)


def test_k_step_average_monotone_for_subharmonic():
    rng = np.random.default_rng(17)
    for _ in range(10):
        g = random_qr_graph(rng)
        f = random_subharmonic(rng, g)
        prev = k_step_average(g, f, 0)
        for k in range(1, 26):
            cur = k_step_average(g, f, k)
            for v in g.vertex_ids:
                assert cur[v] >= prev[v] - 1e-12
            prev = cur


# -- maximally increasing paths --------------------------------------------------


def test_increasing_path_on_path_graph(path_graph):
    f = {"a": 0.0, "b": 0.5, "c": 1.0}
    p = maximally_increasing_path(path_graph, f, "b", max_len=3)
    assert p.vertices == ("b", "c")
    assert p.terminal_kind == "boundary"
    check_increasing_path(path_graph, f, p)


def test_increasing_path_constant_stalls(path_graph):
    f = {v: 1.0 for v in path_graph.vertex_ids}
    with pytest.raises(StalledPathError, match="stalled"):
        maximally_increasing_path(path_graph, f, "b", max_len=3)


def test_increasing_path_half_plane_height():
    trunc = truncate(half_plane(), 5)
    f = height_function(trunc.window)
    p = maximally_increasing_path(trunc.window, f, "0,1", max_len=50,
                                  frontier=trunc.frontier)
    heights = [float(v.split(",")[1]) for v in p.vertices]
    assert heights == sorted(heights)
    assert p.terminal_kind == "frontier"
    assert p.vertices[-1] in set(trunc.frontier)
    check_increasing_path(trunc.window, f, p)


def test_increasing_path_level_set_walk():
    # f is locally constant at v0; the walk must slide along the level set
    # before climbing
    g = WeightedGraph.from_edges([
        ("v0", "v1", 1.0),
        ("v1", "v0", 1.0 / 3), ("v1", "v2", 1.0 / 3), ("v1", "bL", 1.0 / 3),
        ("v2", "v1", 0.5), ("v2", "bR", 0.5),
        ("bL", "bL", 1.0), ("bR", "bR", 1.0)])
    f = {"v0": 0.2, "v1": 0.2, "v2": 0.6, "bL": 0.0, "bR": 1.0}
    p = maximally_increasing_path(g, f, "v0", max_len=10)
    assert p.vertices == ("v1", "v2", "bR")
    assert p.terminal_kind == "boundary"


def test_increasing_path_terminates_at_boundary_random():
    rng = np.random.default_rng(23)
    for _ in range(20):
        g = random_qr_graph(rng)
        f = random_subharmonic(rng, g)
        starts = [v for i, v in enumerate(g.vertex_ids)
                  if not g.boundary_mask()[i]]
        p = maximally_increasing_path(g, f, starts[0], max_len=len(g))
        assert p.terminal_kind == "boundary"
        check_increasing_path(g, f, p)


# -- maximum principle -------------------------------------------------------------


def test_max_principle_random_subharmonic():
    rng = np.random.default_rng(29)
    for _ in range(10):
        g = random_qr_graph(rng)
        f = random_subharmonic(rng, g)
        report = check_maximum_principle(g, f, tol=1e-9)
        assert report.agrees


def test_max_principle_constant(path_graph):
    f = {v: 2.0 for v in path_graph.vertex_ids}
    report = check_maximum_principle(path_graph, f, tol=1e-9)
    assert report.agrees
    assert report.attained_interior
    assert report.constant_on_component


def test_max_principle_simple(path_graph):
    f = {"a": 0.0, "b": 0.5, "c": 1.0}
    report = check_maximum_principle(path_graph, f, tol=1e-9)
    assert report.sup_all == 1.0
    assert report.sup_boundary == 1.0
    assert report.agrees


# -- extension by zero ----------------------------------------------------------------


def test_extend_by_zero(path_graph):
    f = extend_by_zero(path_graph, {"a": 1.0})
    assert f == {"a": 1.0, "b": 0.0, "c": 0.0}
    assert is_subharmonic(path_graph, f, tol=0.0)

    zero = extend_by_zero(path_graph, {})
    assert set(zero.values()) == {0.0}
    assert is_harmonic(path_graph, zero, tol=0.0)

    with pytest.raises(InputError):
        extend_by_zero(path_graph, {"a": -0.5})
    with pytest.raises(InputError):
        extend_by_zero(path_graph, {"b": 1.0})  # b is interior


# -- files ---------------------------------------------------------------------------


def test_parse_vertex_function():
    f = parse_vertex_function(["value a 0.5", "# comment", "value b 1"])
    assert f == {"a": 0.5, "b": 1.0}
    with pytest.raises(InputError):
        parse_vertex_function(["value a"])
