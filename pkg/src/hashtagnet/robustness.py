"""Largest-component percolation under degree-targeted node removal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csgraph

from hashtagnet.graph import WeightedGraph


@dataclass(frozen=True)
class PercolationCurve:
    """``S(f)``: largest-component size over the original vertex count.

    Single runs have ``s_min == s_mean == s_max``; ensembles carry the
    pointwise statistics over replicas.
    """

    variant: str
    fractions: np.ndarray
    s_mean: np.ndarray
    s_min: np.ndarray
    s_max: np.ndarray
    replicas: int = 1

    @property
    def lcc_fraction(self) -> np.ndarray:
        return self.s_mean

    def rows(self):
        return zip(self.fractions.tolist(), self.s_mean.tolist(), self.s_min.tolist(), self.s_max.tolist())


def largest_component_fraction(graph: WeightedGraph) -> float:
    n = graph.n_vertices
    if n == 0:
        return 0.0
    _, comp = csgraph.connected_components(graph.adjacency(), directed=False)
    return float(np.bincount(comp).max()) / n


def batch_size(step_fraction: float, n: int) -> int:
    if not 0 < step_fraction <= 1:
        raise ValueError("step_fraction must be in (0, 1]")
    # tolerance keeps e.g. (1/11) * 11 from rounding up to 2
    return max(1, math.ceil(step_fraction * n - 1e-9))


def removal_order(graph: WeightedGraph) -> np.ndarray:
    """Vertices by initial degree, highest first; ties by lower index."""
    return np.lexsort((np.arange(graph.n_vertices), -graph.degree))


def targeted_attack_curve(
    graph: WeightedGraph, step_fraction: float = 0.01, adaptive: bool = False, variant: str = "original"
) -> PercolationCurve:
    """Remove the most connected vertices in batches, recording ``S`` after each batch.

    The static ranking (default) is computed once on the intact graph and
    evaluated by adding vertices back in reverse order with a union-find.
    ``adaptive=True`` re-ranks the surviving vertices by current degree
    before each batch.
    """
    n = graph.n_vertices
    if n == 0:
        z = np.zeros(1)
        return PercolationCurve(variant, z, z, z, z)
    b = batch_size(step_fraction, n)
    if adaptive:
        removed, sizes = _adaptive_attack(graph, b)
    else:
        removed, sizes = _static_attack(graph, b)
    f = np.asarray(removed, dtype=np.float64) / n
    s = np.asarray(sizes, dtype=np.float64) / n
    return PercolationCurve(variant, f, s, s.copy(), s.copy())


def _static_attack(graph: WeightedGraph, b: int):
    n = graph.n_vertices
    order = removal_order(graph).tolist()
    # checkpoints: number of vertices removed after each batch
    checkpoints = list(range(0, n, b)) + [n]
    adj = graph.adjacency()
    indptr, indices = adj.indptr, adj.indices

    parent = list(range(n))
    size = [1] * n
    alive = [False] * n

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # lcc size when the first `r` ranked vertices are removed, for each r
    lcc_at = {n: 0}
    best = 0
    for r in range(n - 1, -1, -1):
        v = order[r]
        alive[v] = True
        best = max(best, 1)
        for w in indices[indptr[v] : indptr[v + 1]].tolist():
            if alive[w]:
                rv, rw = find(v), find(w)
                if rv != rw:
                    if size[rv] < size[rw]:
                        rv, rw = rw, rv
                    parent[rw] = rv
                    size[rv] += size[rw]
                    best = max(best, size[rv])
        lcc_at[r] = best
    return checkpoints, [lcc_at[c] for c in checkpoints]


def _adaptive_attack(graph: WeightedGraph, b: int):
    n = graph.n_vertices
    adj = graph.adjacency().tocsr()
    alive = np.ones(n, dtype=bool)
    removed_counts, sizes = [0], [_lcc_size(adj, alive)]
    removed = 0
    while removed < n:
        deg = np.asarray(adj[alive][:, alive].getnnz(axis=1)).ravel()
        idx = np.flatnonzero(alive)
        take = idx[np.lexsort((idx, -deg))[:b]]
        alive[take] = False
        removed += len(take)
        removed_counts.append(removed)
        sizes.append(_lcc_size(adj, alive))
    return removed_counts, sizes


def _lcc_size(adj, alive: np.ndarray) -> int:
    if not alive.any():
        return 0
    sub = adj[alive][:, alive]
    _, comp = csgraph.connected_components(sub, directed=False)
    return int(np.bincount(comp).max())


def ensemble_curve(curves: Sequence[PercolationCurve], step_fraction: float, variant: str) -> PercolationCurve:
    """Pointwise mean/min/max of replica curves on the common grid ``0, step, 2*step, ..., 1``.

    Replica curves are linearly interpolated onto the grid, since replicas of
    different sizes are sampled at different removal fractions.
    """
    if not curves:
        raise ValueError("no curves")
    n_steps = math.ceil(1.0 / step_fraction - 1e-9)
    grid = np.minimum(np.arange(n_steps + 1) * step_fraction, 1.0)
    ys = np.vstack([np.interp(grid, c.fractions, c.s_mean) for c in curves])
    lo, hi = ys.min(axis=0), ys.max(axis=0)
    # clip rounding noise so the mean never leaves the replica envelope
    mean = np.clip(ys.mean(axis=0), lo, hi)
    return PercolationCurve(variant, grid, mean, lo, hi, len(curves))


def resample(curve: PercolationCurve, step_fraction: float) -> PercolationCurve:
    return ensemble_curve([curve], step_fraction, curve.variant)
