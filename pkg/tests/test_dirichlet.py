import math

import numpy as np
import pytest

from conftest import random_qr_graph
from graph_potential import (BoundaryData, WeightedGraph, greens_function,
                             check_vanishing_at_infinity, detect_ends,
                             default_radius_ladder, interior, solve_direct,
                             solve_iterative, solve_one_ended, truncate)
from graph_potential.dirichlet import (materialize_boundary_data,
                                       parse_boundary_data, residual_of,
                                       solution_to_csv, solve_radius_ladder)
from graph_potential.errors import (ConvergenceError, EndStructureError,
                                    InputError, SingularSystemError)
from graph_potential.families import half_plane, ladder, line, tree


def test_iterative_path(path_graph, path_data):
    sol = solve_iterative(path_graph, path_data)
    assert sol.values["b"] == pytest.approx(0.5, abs=1e-12)
    assert sol.values["a"] == 0.0 and sol.values["c"] == 1.0
    assert sol.residual <= 1e-8


def test_direct_path(path_graph, path_data):
    sol = solve_direct(path_graph, path_data)
    assert sol.values["b"] == pytest.approx(0.5, abs=1e-12)
    assert sol.residual <= 1e-10


def test_four_cycle_with_absorbers_oracle_agreement():
    edges = []
    for i in range(4):
        edges.append((f"c{i}", f"c{(i + 1) % 4}", 1.0 / 3))
        edges.append((f"c{i}", f"c{(i - 1) % 4}", 1.0 / 3))
        edges.append((f"c{i}", f"b{i}", 1.0 / 3))
        edges.append((f"b{i}", f"b{i}", 1.0))
    g = WeightedGraph.from_edges(edges)
    data = BoundaryData({f"b{i}": float(i % 2) for i in range(4)})
    hi = solve_iterative(g, data, tol=1e-10)
    hd = solve_direct(g, data)
    for v in g.vertex_ids:
        assert abs(hi.values[v] - hd.values[v]) <= 1e-8


def test_iterative_respects_bounds_and_budget(path_graph, path_data):
    with pytest.raises(ConvergenceError):
        solve_iterative(path_graph, path_data, max_iter=0)


def test_direct_singular_system():
    g = WeightedGraph.from_edges([("u", "v", 1.0), ("v", "u", 1.0)])
    with pytest.raises(SingularSystemError,
                       match="no boundary attachment"):
        solve_direct(g, BoundaryData())


def test_direct_unreachable_interior():
    # w only reaches the boundary-free pocket {u, v}
    g = WeightedGraph.from_edges([
        ("a", "a", 1.0), ("x", "a", 0.5), ("x", "u", 0.5),
        ("u", "v", 1.0), ("v", "u", 1.0)])
    with pytest.raises(SingularSystemError):
        solve_direct(g, BoundaryData({"a": 1.0}))


def test_uniqueness_different_starts():
    rng = np.random.default_rng(31)
    for _ in range(5):
        g = random_qr_graph(rng)
        boundary = [v for i, v in enumerate(g.vertex_ids)
                    if g.boundary_mask()[i]]
        data = BoundaryData({b: float(rng.uniform(-1, 1)) for b in boundary})
        tol = 1e-8
        hd = solve_direct(g, data).values
        h1 = solve_iterative(g, data, tol=tol).values
        shifted = BoundaryData({b: v + 2.0 for b, v in data.vertex_values.items()})
        h2 = {v: x - 2.0 for v, x in
              solve_iterative(g, shifted, tol=tol).values.items()}
        for v in g.vertex_ids:
            assert abs(h1[v] - hd[v]) <= 10 * tol
            assert abs(h2[v] - hd[v]) <= 10 * tol


def test_solution_between_data_bounds():
    rng = np.random.default_rng(37)
    g = random_qr_graph(rng)
    boundary = [v for i, v in enumerate(g.vertex_ids)
                if g.boundary_mask()[i]]
    data = BoundaryData({b: float(rng.uniform(-3, 5)) for b in boundary})
    sol = solve_iterative(g, data)
    lo = min(data.vertex_values.values())
    hi = max(data.vertex_values.values())
    for v, x in sol.values.items():
        assert lo - 1e-9 <= x <= hi + 1e-9


def test_non_quasi_reversible_warns():
    g = WeightedGraph.from_edges([
        ("a", "a", 1.0), ("u", "v", 1.0),
        ("v", "u", 0.5), ("v", "a", 0.25), ("v", "v", 0.25)])
    qr_sol = solve_iterative(g, BoundaryData({"a": 1.0}))
    assert not qr_sol.metadata["warnings"]
    g2 = WeightedGraph.from_edges([
        ("a", "a", 1.0), ("u", "v", 1.0),
        ("v", "a", 0.5), ("v", "v", 0.5)])
    sol = solve_iterative(g2, BoundaryData({"a": 1.0}))
    assert any("quasi-reversible" in w for w in sol.metadata["warnings"])


# -- Green's function -----------------------------------------------------------


def test_green_single_hop():
    g = WeightedGraph.from_edges([("a", "a", 1.0), ("b", "a", 1.0)])
    t = greens_function(g, "b", "b", max_order=50)
    assert t.value == 1.0
    t2 = greens_function(g, "b", "a", max_order=50)
    assert t2.value == 1.0  # absorbed at a with certainty, tallied once
    with pytest.raises(InputError):
        greens_function(g, "a", "b")


def test_green_partial_sums_monotone():
    window = truncate(line(), 20).window
    t = greens_function(window, "5", "3", max_order=100)
    assert (t.increments >= 0).all()
    sums = t.partial_sums()
    assert (np.diff(sums) >= 0).all()


def test_green_tree_summable_line_divergent():
    tw = truncate(tree(3), 8).window
    gt = greens_function(tw, "t", "t", max_order=500)
    assert gt.decay == "summable"
    assert gt.value == pytest.approx(4.0 / 3.0, abs=1e-3)

    lw = truncate(line(), 60).window
    gl = greens_function(lw, "30", "30", max_order=500)
    assert gl.decay == "divergent"


def test_green_vanishes_along_tree_ray():
    tw = truncate(tree(3), 9).window
    values = []
    for depth in (2, 4, 6, 8):
        x = "t" + "0" * (depth - 1)
        values.append(greens_function(tw, x, "t", max_order=400).value)
    assert values == sorted(values, reverse=True)
    assert values[-1] < 0.05


def test_green_tail_tol_stop():
    tw = truncate(tree(3), 6).window
    t = greens_function(tw, "t", "t", max_order=500, tail_tol=1e-10)
    assert t.order < 500
    assert t.tail_bound < 1e-10


# -- vanishing at infinity -------------------------------------------------------


def test_vanishing_tree_found():
    g = tree(3)
    dec = detect_ends(g, default_radius_ladder(8))
    rep = check_vanishing_at_infinity(g, dec, "root", 0.01,
                                      k_max=400, dist_max=6)
    assert rep.found
    assert rep.n2 <= 5


def test_vanishing_line_not_found():
    g = line()
    dec = detect_ends(g, default_radius_ladder(40))
    rep = check_vanishing_at_infinity(g, dec, "0", 0.01,
                                      k_max=1500, dist_max=20)
    assert not rep.found


def test_vanishing_trivial_epsilon():
    g = tree(3)
    dec = detect_ends(g, default_radius_ladder(6))
    rep = check_vanishing_at_infinity(g, dec, "root", 1.5)
    assert rep.found and rep.n1 == 0 and rep.n2 == 0


# -- one-ended solver ---------------------------------------------------------------


def axis_data(value_fn, end_value, extent=40):
    return BoundaryData({f"{x},0": value_fn(x) for x in range(-extent, extent + 1)},
                        {"end-0": end_value})


def test_one_ended_zero_data():
    sol = solve_one_ended(half_plane(), axis_data(lambda x: 0.0, 0.0),
                          r_ladder=[8, 12, 16])
    assert max(abs(v) for v in sol.values.values()) <= 1e-8
    assert sol.metadata["continuity_certified"]


def test_one_ended_constant_data():
    sol = solve_one_ended(half_plane(), axis_data(lambda x: 2.5, 2.5),
                          r_ladder=[8, 12, 16])
    vals = set(sol.values.values())
    assert vals == {2.5}


def test_one_ended_end_value_vs_direct():
    data = axis_data(lambda x: 0.0, 1.0)
    sol = solve_one_ended(half_plane(), data, tol=1e-8, r_ladder=[14])
    trunc = truncate(half_plane(), 14)
    direct = solve_direct(trunc.window, data, trunc.end_of_frontier)
    for v in direct.values:
        assert abs(sol.values[v] - direct.values[v]) <= 1e-7
    assert all(sol.values[v] > 0 for v in interior(trunc.window))
    assert not sol.metadata["continuity_certified"]


def test_one_ended_ladder_disagreement_raises():
    # indicator data: window solutions genuinely differ across radii
    data = axis_data(lambda x: 1.0 if x == 0 else 0.0, 0.0)
    with pytest.raises(ConvergenceError, match="no convergence in R"):
        solve_one_ended(half_plane(), data, tol=1e-8, r_ladder=[8, 12, 16])


def test_one_ended_multiple_ends_rejected():
    data = BoundaryData({}, {"end-0": 0.0})
    with pytest.raises(EndStructureError, match="multiple ends"):
        solve_one_ended(ladder(), data, r_ladder=[10])


def test_one_ended_monotone_in_radius():
    data = axis_data(lambda x: 1.0 / (1.0 + x * x), 0.0)
    prev = None
    for radius in (8, 12, 16):
        trunc = truncate(half_plane(), radius)
        sol = solve_iterative(trunc.window, data, trunc.end_of_frontier,
                              tol=1e-10)
        if prev is not None:
            for v, x in prev.items():
                assert sol.values[v] >= x - 1e-12
        prev = {v: sol.values[v] for v in trunc.window.vertex_ids}


# -- files and formats -----------------------------------------------------------------


def test_parse_boundary_data():
    data = parse_boundary_data([
        "vertex a 0.5", "end end-0 1.0", "# comment", "vertex b -2"])
    assert data.vertex_values == {"a": 0.5, "b": -2.0}
    assert data.end_values == {"end-0": 1.0}
    assert data.bound() == 2.0
    with pytest.raises(InputError):
        parse_boundary_data(["vertex a 0.5", "vertex a 0.7"])
    with pytest.raises(InputError):
        parse_boundary_data(["edge a b 1"])


def test_materialize_defaults(path_graph):
    data = BoundaryData({"a": 0.25})
    explicit = materialize_boundary_data(path_graph, data)
    assert explicit.vertex_values == {"a": 0.25, "c": 0.0}


def test_solution_csv_format(path_graph, path_data):
    sol = solve_direct(path_graph, path_data)
    text = solution_to_csv(sol, {"input": "path"})
    lines = text.splitlines()
    assert lines[0].startswith("# meta: method=direct")
    assert "input=path" in lines[0]
    assert lines[1] == "vertex,value"
    assert lines[2] == "a,0"
    assert lines[3].startswith("b,0.5")


def test_solve_radius_ladder():
    assert solve_radius_ladder(30) == [15, 22, 30]
