"""Weighted modularity, Louvain communities and per-community summaries."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from hashtagnet.corpus import MessageRecord
from hashtagnet.graph import WeightedGraph

MOVE_TOLERANCE = 1e-9
# gains closer than this are treated as equal (lowest community id wins)
TIE_TOLERANCE = 1e-12
TOP_MEMBERS = 10


class CommunityError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Community assignment of graph vertices.

    Community ids are dense and ordered by decreasing total strength, so
    community 0 carries the most weight.
    """

    assignment: np.ndarray
    modularity: float
    labels: tuple[str, ...]
    strengths: np.ndarray
    levels: list[np.ndarray] = field(default_factory=list, repr=False, compare=False)
    seed: int | None = None

    @property
    def n_communities(self) -> int:
        return len(self.strengths)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_communities)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == c)

    def label_map(self) -> dict[str, int]:
        return dict(zip(self.labels, self.assignment.tolist()))

    def top_members(self, graph: WeightedGraph, k: int = TOP_MEMBERS) -> list[list[str]]:
        """Highest-strength member labels per community."""
        out = []
        for c in range(self.n_communities):
            idx = self.members(c)
            order = idx[np.lexsort((idx, -graph.strength[idx]))][:k]
            out.append([self.labels[i] for i in order.tolist()])
        return out

    def summary(self, graph: WeightedGraph, min_size: int = 1) -> dict:
        sizes = self.sizes.tolist()
        top = self.top_members(graph)
        comms = [
            {"community": c, "size": sizes[c], "strength": int(self.strengths[c]), "top_members": top[c]}
            for c in range(self.n_communities)
        ]
        return {
            "modularity": self.modularity,
            "n_communities": self.n_communities,
            "min_size": min_size,
            "n_communities_min_size": sum(s >= min_size for s in sizes),
            "seed": self.seed,
            "communities": [d for d in comms if d["size"] >= min_size],
        }


def modularity(graph: WeightedGraph, assignment, resolution: float = 1.0) -> float:
    """Newman weighted modularity ``Q = sum_c [W_c/m - resolution * (S_c/2m)^2]``.

    ``W_c`` is the weight inside community c, ``S_c`` its total strength and
    ``m`` the total edge weight.
    """
    assignment = np.asarray(assignment)
    if assignment.shape != (graph.n_vertices,):
        raise CommunityError("assignment must cover every vertex")
    if np.any(assignment < 0):
        raise CommunityError("unassigned vertex")
    m = float(graph.total_weight)
    if m == 0:
        raise CommunityError("m=0")
    n_comm = int(assignment.max()) + 1 if len(assignment) else 0
    cs, cd = assignment[graph.src], assignment[graph.dst]
    intra = np.bincount(cs[cs == cd], weights=graph.weight[cs == cd], minlength=n_comm)
    tot = np.bincount(assignment, weights=graph.strength, minlength=n_comm)
    return float(intra.sum() / m - resolution * np.sum((tot / (2 * m)) ** 2))


def louvain_partition(
    graph: WeightedGraph,
    seed: int = 0,
    resolution: float = 1.0,
    on_move: Callable[[np.ndarray, float], None] | None = None,
) -> Partition:
    """Two-phase Louvain modularity maximisation.

    Each level sweeps the vertices in a seeded random order, moving each to
    the neighbouring community with the largest modularity gain as long as
    some gain exceeds ``MOVE_TOLERANCE``; communities are then collapsed
    into vertices and the process repeats until a level makes no move.

    ``on_move(assignment, delta_q)`` is called after every accepted move
    with the current assignment of the original vertices and the predicted
    modularity increase.
    """
    if graph.n_edges == 0:
        raise CommunityError("graph has no edges")
    rng = np.random.default_rng(seed)
    n = graph.n_vertices
    adj = graph.adjacency().astype(np.float64)
    # current-level node holding each original vertex
    node_of = np.arange(n)
    levels = []

    while True:
        comm, moved = _local_moves(adj, rng, resolution, node_of if on_move else None, on_move)
        if not moved:
            break
        comm, n_comm = _dense(comm)
        node_of = comm[node_of]
        levels.append(node_of.copy())
        member = sparse.csr_matrix((np.ones(len(comm)), (np.arange(len(comm)), comm)), shape=(len(comm), n_comm))
        adj = (member.T @ adj @ member).tocsr()

    return _finish(graph, node_of, resolution, levels, seed)


def _local_moves(adj: sparse.csr_matrix, rng, resolution, node_of, on_move):
    n = adj.shape[0]
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    nbrs, wts, k = [], [], adj.sum(axis=1).A1.tolist()
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        js = indices[lo:hi].tolist()
        ws = data[lo:hi].tolist()
        pairs = [(j, w) for j, w in zip(js, ws) if j != i]
        nbrs.append([j for j, _ in pairs])
        wts.append([w for _, w in pairs])
    m2 = float(sum(k))
    comm = list(range(n))
    tot = list(k)
    order = rng.permutation(n).tolist()
    moved_any = False

    while True:
        moved = 0
        for i in order:
            ci = comm[i]
            ki = k[i]
            w_to: dict[int, float] = {}
            for j, w in zip(nbrs[i], wts[i]):
                cj = comm[j]
                w_to[cj] = w_to.get(cj, 0.0) + w
            tot[ci] -= ki
            scale = resolution * ki / m2
            base = w_to.get(ci, 0.0) - tot[ci] * scale
            best_c, best_g = ci, None
            for c in sorted(w_to):
                if c == ci:
                    continue
                g = w_to[c] - tot[c] * scale
                if best_g is None or g > best_g + TIE_TOLERANCE:
                    best_c, best_g = c, g
            if best_g is not None and 2.0 * (best_g - base) / m2 > MOVE_TOLERANCE:
                comm[i] = best_c
                tot[best_c] += ki
                moved += 1
                if on_move is not None:
                    on_move(np.asarray(comm)[node_of], 2.0 * (best_g - base) / m2)
            else:
                tot[ci] += ki
        if not moved:
            break
        moved_any = True
    return np.asarray(comm), moved_any


def _dense(comm: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel ids to 0..C-1 in order of first appearance."""
    _, first, inv = np.unique(comm, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inv.ravel()], len(first)


def _finish(graph: WeightedGraph, assignment: np.ndarray, resolution, levels, seed) -> Partition:
    assignment, n_comm = _dense(assignment)
    strengths = np.bincount(assignment, weights=graph.strength, minlength=n_comm).astype(np.int64)
    first = np.full(n_comm, graph.n_vertices)
    np.minimum.at(first, assignment, np.arange(graph.n_vertices))
    order = np.lexsort((first, -strengths))
    relabel = np.empty(n_comm, dtype=np.int64)
    relabel[order] = np.arange(n_comm)
    assignment = relabel[assignment]
    return Partition(
        assignment=assignment,
        modularity=modularity(graph, assignment, resolution),
        labels=graph.labels,
        strengths=strengths[order],
        levels=levels,
        seed=seed,
    )


def best_of_runs(graph: WeightedGraph, seed: int = 0, runs: int = 1, resolution: float = 1.0) -> Partition:
    """Run Louvain ``runs`` times with derived seeds; keep the highest modularity (first on ties)."""
    extra = np.random.SeedSequence(seed & (2**64 - 1)).generate_state(max(runs - 1, 0), dtype=np.uint64)
    seeds = [seed] + extra.tolist()
    best = None
    for s in seeds:
        p = louvain_partition(graph, s, resolution)
        if best is None or p.modularity > best.modularity:
            best = p
    return best


def interaction_matrix(graph: WeightedGraph, partition: Partition) -> np.ndarray:
    """Summed edge weight between communities (symmetric); intra weight counted once on the diagonal."""
    c = partition.n_communities
    a, b = partition.assignment[graph.src], partition.assignment[graph.dst]
    mat = np.zeros((c, c), dtype=np.int64)
    np.add.at(mat, (a, b), graph.weight)
    off = a != b
    np.add.at(mat, (b[off], a[off]), graph.weight[off])
    return mat


@dataclass(frozen=True)
class ActivitySeries:
    days: list[date]
    counts: np.ndarray
    shares: np.ndarray


def activity_series(records: Sequence[MessageRecord], partition: Partition) -> ActivitySeries:
    """Daily share of messages touching each community.

    A message counts once for every community owning at least one of its
    hashtags; each day's shares are normalised by the sum of those counts.
    Days without attributed messages are all zero.
    """
    labels = partition.label_map()
    c = partition.n_communities
    if not records:
        return ActivitySeries([], np.zeros((0, c), dtype=np.int64), np.zeros((0, c)))
    first = min(r.day for r in records)
    last = max(r.day for r in records)
    n_days = (last - first).days + 1
    counts = np.zeros((n_days, c), dtype=np.int64)
    for rec in records:
        comms = {labels[t] for t in rec.hashtags if t in labels}
        d = (rec.day - first).days
        for cc in comms:
            counts[d, cc] += 1
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        shares = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
    days = [first + timedelta(days=i) for i in range(n_days)]
    return ActivitySeries(days, counts, shares)
