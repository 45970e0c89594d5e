"""Seeded random-walk oracle for harmonic values.

A walk follows the transition weights until it is absorbed at a boundary
vertex, escapes through a truncation frontier vertex (scoring the end's
value), or runs out of steps (censored).  Estimates average the boundary
data over non-censored walks; walk i draws its randomness from its own
PCG64 substream derived from (seed, i), so results are reproducible
bit-for-bit and independent of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .dirichlet import BoundaryData
from .errors import InputError
from .graph_core import WeightedGraph

RNG_NAME = "pcg64"
#: uniforms are drawn from each substream in blocks of this size
CHUNK = 512


@dataclass(frozen=True)
class WalkOutcome:
    kind: str          # "absorbed" | "escaped" | "censored"
    site: str | None   # absorbing vertex, or frontier vertex for escapes
    end: str | None    # end id for escapes
    steps: int


@dataclass
class Estimate:
    mean: float
    half_width_95: float
    n_walks: int
    censored_fraction: float
    seed: int
    metadata: dict = field(default_factory=dict)


class _SamplerTables:
    """Padded per-vertex cumulative-weight tables for vectorized stepping.

    next vertex = targets[pos, #(cumweights[pos] <= u)] for u ~ U[0,1);
    padding cells carry cumulative weight 2.0 so they are never selected.
    """

    def __init__(self, window: WeightedGraph):
        n = len(window)
        degrees = [window.row_arrays(i)[0].size for i in range(n)]
        dmax = max(degrees) if degrees else 1
        self.targets = np.zeros((n, dmax), dtype=np.int64)
        self.cumw = np.full((n, dmax), 2.0)
        for i in range(n):
            t, w = window.row_arrays(i)
            if t.size == 0:
                raise InputError(
                    f"vertex {window.vertex_ids[i]} has no out-edges")
            c = np.cumsum(w)
            c[-1] = 1.0  # guard against round-off at the top
            self.targets[i, :t.size] = t
            self.cumw[i, :t.size] = c

    def step(self, pos: np.ndarray, u: np.ndarray) -> np.ndarray:
        choice = (self.cumw[pos] <= u[:, None]).sum(axis=1)
        return self.targets[pos, choice]


def _substream(seed: int, walk_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(walk_index,)))


def _run_batch(window: WeightedGraph, start_idx: int, seed: int,
               n_walks: int, max_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Run n_walks walks in lockstep; returns (final position, steps) with
    steps == max_steps + 1 marking censored walks.

    Walk i consumes uniforms from substream (seed, i) in CHUNK-sized blocks
    in step order, so the batch reproduces single-walk runs exactly.
    """
    tables = _SamplerTables(window)
    mask = window.boundary_mask()
    gens = [_substream(seed, i) for i in range(n_walks)]

    pos = np.full(n_walks, start_idx, dtype=np.int64)
    steps = np.zeros(n_walks, dtype=np.int64)
    alive = ~mask[pos]
    uniforms = np.empty((n_walks, CHUNK))
    for i in range(n_walks):
        uniforms[i] = gens[i].random(CHUNK)
    cursor = 0
    taken = 0
    while alive.any() and taken < max_steps:
        if cursor == CHUNK:
            for i in np.nonzero(alive)[0]:
                uniforms[i] = gens[i].random(CHUNK)
            cursor = 0
        idx = np.nonzero(alive)[0]
        pos[idx] = tables.step(pos[idx], uniforms[idx, cursor])
        steps[idx] += 1
        cursor += 1
        taken += 1
        alive[idx] = ~mask[pos[idx]]
    steps[alive] = max_steps + 1
    return pos, steps


def run_walk(window: WeightedGraph, end_map: Mapping[str, str] | None,
             start: str, seed: int, max_steps: int = 10 ** 6) -> WalkOutcome:
    """Run one seeded walk from start until absorption or the step budget."""
    start_idx = window.index(start)
    pos, steps = _run_batch(window, start_idx, seed, 1, max_steps)
    return _outcome(window, end_map or {}, int(pos[0]), int(steps[0]), max_steps)


def _outcome(window: WeightedGraph, end_map: Mapping[str, str],
             pos: int, steps: int, max_steps: int) -> WalkOutcome:
    if steps > max_steps:
        return WalkOutcome("censored", None, None, max_steps)
    v = window.vertex_ids[pos]
    if v in end_map:
        return WalkOutcome("escaped", v, end_map[v], steps)
    return WalkOutcome("absorbed", v, None, steps)


def estimate_harmonic(window: WeightedGraph, data: BoundaryData,
                      end_map: Mapping[str, str] | None, x: str,
                      n_walks: int, seed: int,
                      max_steps: int = 10 ** 6) -> Estimate:
    """Estimate the harmonic value at x as the average boundary datum at
    absorption, with a normal-approximation 95% half-width.

    Censored walks are excluded from the mean and reported through
    censored_fraction (a warning is flagged above one half).  Aggregation
    uses exact summation, so the estimate is independent of walk order.
    """
    if n_walks < 1:
        raise InputError("need at least one walk")
    end_map = end_map or {}
    start_idx = window.index(x)
    pos, steps = _run_batch(window, start_idx, seed, n_walks, max_steps)

    boundary_score = np.zeros(len(window))
    ids = window.vertex_ids
    for i in np.nonzero(window.boundary_mask())[0]:
        v = ids[i]
        if v in end_map:
            boundary_score[i] = float(data.end_values.get(end_map[v], 0.0))
        else:
            boundary_score[i] = float(data.vertex_values.get(v, 0.0))

    done = steps <= max_steps
    n_done = int(done.sum())
    censored_fraction = 1.0 - n_done / n_walks
    meta = {"rng": RNG_NAME, "start": x, "max_steps": max_steps,
            "warnings": []}
    if censored_fraction > 0.5:
        meta["warnings"].append("more than half the walks were censored; "
                                "estimate unreliable")
    if n_done == 0:
        return Estimate(math.nan, math.nan, 0, 1.0, seed, meta)

    scores = boundary_score[pos[done]]
    lo, hi = float(scores.min()), float(scores.max())
    if lo == hi:
        # all walks scored the same value: the mean is exactly that value
        return Estimate(lo, 0.0, n_done, censored_fraction, seed, meta)
    mean = math.fsum(scores) / n_done
    var = math.fsum((s - mean) ** 2 for s in scores) / (n_done - 1)
    half = 1.96 * math.sqrt(var / n_done)
    return Estimate(mean, half, n_done, censored_fraction, seed, meta)
