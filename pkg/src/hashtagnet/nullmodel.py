"""Null models: hashtag-occurrence reshuffling and degree-preserving rewiring."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from hashtagnet.corpus import MessageRecord
from hashtagnet.graph import WeightedGraph

log = logging.getLogger(__name__)

METHODS = ("ab_initio", "configuration")


@dataclass(frozen=True)
class NullModelSpec:
    method: str
    seed: int
    replicas: int = 1
    swaps_per_edge: int = 10

    def __post_init__(self):
        method = self.method.replace("-", "_")
        if method not in METHODS:
            raise ValueError(f"unknown null model {self.method!r}")
        object.__setattr__(self, "method", method)
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.swaps_per_edge < 1:
            raise ValueError("swaps_per_edge must be >= 1")


@dataclass
class ShuffleReport:
    seed: int
    n_occurrences: int
    # (message position, hashtag) for every occurrence dropped as a within-message duplicate
    collapsed: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_collapsed(self) -> int:
        return len(self.collapsed)

    def as_dict(self) -> dict:
        return {"seed": self.seed, "n_occurrences": self.n_occurrences, "n_collapsed": self.n_collapsed}


@dataclass
class RewireReport:
    seed: int
    attempted: int = 0
    accepted: int = 0
    rejected: int = 0
    warning: str | None = None

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "attempted": self.attempted,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "warning": self.warning,
        }


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Independent generator stream for one replica of a seeded ensemble."""
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), replica]))


def ab_initio_shuffle(
    records: Sequence[MessageRecord], seed: int, rng: np.random.Generator | None = None
) -> tuple[list[MessageRecord], ShuffleReport]:
    """Pool every hashtag occurrence, permute, and redeal into the original slots.

    Each message keeps its author, timestamp and number of hashtag slots. A
    tag dealt twice into one message is kept once and the extra occurrence is
    listed in the report.
    """
    rng = rng if rng is not None else replica_rng(seed)
    pool = [t for rec in records for t in rec.hashtags]
    perm = rng.permutation(len(pool))
    report = ShuffleReport(seed, len(pool))
    out = []
    pos = 0
    for k, rec in enumerate(records):
        n = len(rec.hashtags)
        dealt = {}
        for p in perm[pos : pos + n].tolist():
            tag = pool[p]
            if tag in dealt:
                report.collapsed.append((k, tag))
            else:
                dealt[tag] = None
        pos += n
        out.append(replace(rec, hashtags=tuple(dealt)))
    if report.collapsed:
        log.info("ab-initio shuffle collapsed %d duplicate occurrence(s)", report.n_collapsed)
    return out, report


def configuration_rewire(
    graph: WeightedGraph,
    seed: int,
    swaps_per_edge: int = 10,
    rng: np.random.Generator | None = None,
) -> tuple[WeightedGraph, RewireReport]:
    """Degree-preserving randomisation by repeated double-edge swaps.

    ``swaps_per_edge * |E|`` swaps are attempted; a swap of ``(a, b), (c, d)``
    into ``(a, c), (b, d)`` or ``(a, d), (b, c)`` is rejected when it would
    create a self-loop or a duplicate edge. The result is unweighted (all
    weights 1).
    """
    rng = rng if rng is not None else replica_rng(seed)
    report = RewireReport(seed)
    m = graph.n_edges
    if m < 2:
        report.warning = "graph too small to swap"
        log.warning("configuration rewire skipped: %d edge(s)", m)
        return WeightedGraph(graph.labels, graph.src, graph.dst, np.ones(m, dtype=np.int64)), report

    n = graph.n_vertices
    a = graph.src.tolist()
    b = graph.dst.tolist()
    present = {x * n + y for x, y in zip(a, b)}

    n_swaps = swaps_per_edge * m
    e1 = rng.integers(0, m, size=n_swaps).tolist()
    # second edge drawn from the other m-1 so the pair is always distinct
    e2 = rng.integers(0, m - 1, size=n_swaps).tolist()
    flip = rng.integers(0, 2, size=n_swaps).tolist()

    accepted = 0
    for i, j, f in zip(e1, e2, flip):
        if j >= i:
            j += 1
        u, v = a[i], b[i]
        x, y = (a[j], b[j]) if f else (b[j], a[j])
        # new edges (u, x) and (v, y)
        if u == x or v == y:
            continue
        k1 = u * n + x if u < x else x * n + u
        k2 = v * n + y if v < y else y * n + v
        if k1 == k2 or k1 in present or k2 in present:
            continue
        present.discard(u * n + v if u < v else v * n + u)
        present.discard(a[j] * n + b[j] if a[j] < b[j] else b[j] * n + a[j])
        present.add(k1)
        present.add(k2)
        a[i], b[i] = (u, x) if u < x else (x, u)
        a[j], b[j] = (v, y) if v < y else (y, v)
        accepted += 1

    report.attempted = n_swaps
    report.accepted = accepted
    report.rejected = n_swaps - accepted
    return WeightedGraph(graph.labels, a, b, np.ones(m, dtype=np.int64)), report


def ab_initio_ensemble(records, seed: int, replicas: int):
    """Yield ``(shuffled records, report)`` per replica."""
    for r in range(replicas):
        yield ab_initio_shuffle(records, seed, rng=replica_rng(seed, r))


def configuration_ensemble(graph: WeightedGraph, seed: int, replicas: int, swaps_per_edge: int = 10):
    for r in range(replicas):
        yield configuration_rewire(graph, seed, swaps_per_edge, rng=replica_rng(seed, r))
