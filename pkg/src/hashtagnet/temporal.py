"""Daily snapshots, Jaccard innovation series, permanence times and community flows."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from hashtagnet.community import CommunityError, Partition, best_of_runs
from hashtagnet.corpus import MessageRecord
from hashtagnet.graph import WeightedGraph, build_bipartite, project, project_semantic
from hashtagnet.stats import BinnedCurve, log_binned_mean

DEFAULT_PHASES = (40, 120)
DEFAULT_SMOOTH_WINDOW = 7
ABSENT = "absent"


@dataclass(frozen=True)
class SnapshotSeries:
    """One projection per calendar day from the first to the last corpus day."""

    kind: str
    days: list[date]
    graphs: list[WeightedGraph]

    def __len__(self):
        return len(self.days)


@dataclass(frozen=True)
class JaccardSeries:
    days: list[date]
    nodes: np.ndarray
    edges: np.ndarray
    nodes_smooth: np.ndarray
    edges_smooth: np.ndarray
    window: int


@dataclass(frozen=True)
class PermanenceTable:
    entity: str
    labels: tuple[str, ...]
    t_min: np.ndarray
    t_max: np.ndarray

    @property
    def permanence(self) -> np.ndarray:
        return self.t_max - self.t_min

    def lookup(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}


@dataclass(frozen=True)
class CommunitySpan:
    community: int
    size: int
    span: float
    mean_t_min: float
    mean_t_max: float
    # fraction of members entering / leaving in each week (week 1 = days 1..7)
    entering: list[float]
    leaving: list[float]

    def as_dict(self) -> dict:
        return {
            "community": self.community,
            "size": self.size,
            "T": self.span,
            "mean_t_min": self.mean_t_min,
            "mean_t_max": self.mean_t_max,
            "entering_by_week": self.entering,
            "leaving_by_week": self.leaving,
        }


@dataclass(frozen=True)
class CommunityFlow:
    early: Partition | None
    late: Partition | None
    matrix: np.ndarray
    row_labels: list[str]
    col_labels: list[str]
    early_top: list[list[tuple[str, int]]]
    late_top: list[list[tuple[str, int]]]


def day_number(records: Sequence[MessageRecord]):
    """Map a record to its day index, the first corpus day being day 1."""
    first = min(r.day for r in records)
    return lambda rec: (rec.day - first).days + 1


def snapshot_series(records: Sequence[MessageRecord], kind: str = "semantic", cooccurrence: str = "tweet") -> SnapshotSeries:
    """Build the chosen projection separately from each day's records.

    Calendar days without messages are kept as empty snapshots.
    """
    if not records:
        return SnapshotSeries(kind, [], [])
    first = min(r.day for r in records)
    n_days = (max(r.day for r in records) - first).days + 1
    buckets: list[list[MessageRecord]] = [[] for _ in range(n_days)]
    for rec in records:
        buckets[(rec.day - first).days].append(rec)
    graphs = [project(build_bipartite(b), kind, cooccurrence) for b in buckets]
    return SnapshotSeries(kind, [first + timedelta(days=i) for i in range(n_days)], graphs)


def jaccard(a: set, b: set) -> float:
    """``|a & b| / |a | b|``; two empty sets count as identical."""
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def jaccard_series(series: SnapshotSeries, window: int = DEFAULT_SMOOTH_WINDOW) -> JaccardSeries:
    if len(series) < 2:
        raise ValueError("need at least two snapshots")
    node_sets = [set(g.labels) for g in series.graphs]
    edge_sets = [g.edge_label_set() for g in series.graphs]
    jn = np.array([jaccard(node_sets[t - 1], node_sets[t]) for t in range(1, len(series))])
    je = np.array([jaccard(edge_sets[t - 1], edge_sets[t]) for t in range(1, len(series))])
    w = min(window, len(jn) if len(jn) % 2 else len(jn) - 1)
    return JaccardSeries(series.days[1:], jn, je, smooth_series(jn, w), smooth_series(je, w), w)


def smooth_series(values, window: int = DEFAULT_SMOOTH_WINDOW) -> np.ndarray:
    """Centred moving average; near the ends the window is clipped to the available values."""
    values = np.asarray(values, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be an odd positive integer")
    if window > len(values):
        raise ValueError("window larger than series")
    half = window // 2
    padded = np.pad(values, half, constant_values=np.nan)
    out = np.nanmean(np.lib.stride_tricks.sliding_window_view(padded, window), axis=1)
    # summation can drift by an ulp outside the local envelope
    return np.clip(out, values.min(), values.max())


def permanence_table(records: Sequence[MessageRecord], entity: str = "hashtag") -> PermanenceTable:
    """First and last appearance day (day 1 = first corpus day) per hashtag or user."""
    if not records:
        raise ValueError("empty corpus")
    if entity not in ("hashtag", "user"):
        raise ValueError(f"unknown entity {entity!r}")
    day_of = day_number(records)
    first: dict[str, int] = {}
    last: dict[str, int] = {}
    for rec in records:
        d = day_of(rec)
        keys = rec.hashtags if entity == "hashtag" else (rec.author,)
        for key in keys:
            if key not in first or d < first[key]:
                first[key] = d
            if key not in last or d > last[key]:
                last[key] = d
    labels = tuple(first)
    return PermanenceTable(
        entity,
        labels,
        np.array([first[k] for k in labels], dtype=np.int64),
        np.array([last[k] for k in labels], dtype=np.int64),
    )


def community_span(partition: Partition, table: PermanenceTable, week: int = 7) -> list[CommunitySpan]:
    """Average member permanence ``mean(t_max) - mean(t_min)`` per community."""
    pos = table.lookup()
    missing = [lab for lab in partition.labels if lab not in pos]
    if missing:
        raise KeyError(f"community members missing from permanence table: {missing[:5]}")
    idx = np.array([pos[lab] for lab in partition.labels], dtype=np.int64)
    t_min, t_max = table.t_min[idx], table.t_max[idx]
    n_weeks = int((max(table.t_max.max(), 1) - 1) // week + 1)
    out = []
    for c in range(partition.n_communities):
        mask = partition.assignment == c
        lo, hi = t_min[mask], t_max[mask]
        size = int(mask.sum())
        entering = np.bincount(np.maximum(lo - 1, 0) // week, minlength=n_weeks) / size
        leaving = np.bincount(np.maximum(hi - 1, 0) // week, minlength=n_weeks) / size
        out.append(
            CommunitySpan(
                c,
                size,
                float(hi.sum() / size - lo.sum() / size),
                float(lo.mean()),
                float(hi.mean()),
                entering.tolist(),
                leaving.tolist(),
            )
        )
    return out


def permanence_vs_degree(graph: WeightedGraph, table: PermanenceTable) -> BinnedCurve:
    pos = table.lookup()
    try:
        idx = np.array([pos[lab] for lab in graph.labels], dtype=np.int64)
    except KeyError as exc:
        raise KeyError(f"vertex {exc.args[0]!r} missing from permanence table") from None
    perm = table.permanence[idx] if len(idx) else np.empty(0)
    ok = graph.degree > 0
    return log_binned_mean(graph.degree[ok], perm[ok], "permanence_vs_degree")


def phase_bounds(boundaries: Sequence[int], last_day: int) -> list[tuple[int, int]]:
    """Inclusive ``(first, last)`` day of each phase; boundaries close phases."""
    bounds = list(boundaries)
    if any(b <= a for a, b in zip(bounds, bounds[1:])) or (bounds and bounds[0] < 1):
        raise ValueError("phase boundaries must be positive and strictly increasing")
    starts = [1] + [b + 1 for b in bounds]
    ends = bounds + [max(last_day, bounds[-1] + 1 if bounds else last_day)]
    return list(zip(starts, ends))


def phase_new_hashtags(
    records: Sequence[MessageRecord],
    boundaries: Sequence[int] = DEFAULT_PHASES,
    require_exit: bool = False,
) -> list[list[tuple[str, int]]]:
    """Hashtags first used in each phase, most frequent first.

    With ``require_exit`` a hashtag of any phase but the last is kept only
    if its last use also falls before the next phase starts.
    """
    if not records:
        return [[] for _ in range(len(boundaries) + 1)]
    table = permanence_table(records, "hashtag")
    freq = Counter(t for rec in records for t in rec.hashtags)
    phases = phase_bounds(boundaries, int(table.t_max.max()))
    out: list[list[tuple[str, int]]] = [[] for _ in phases]
    for lab, lo, hi in zip(table.labels, table.t_min.tolist(), table.t_max.tolist()):
        for p, (start, end) in enumerate(phases):
            if start <= lo <= end:
                if require_exit and p < len(phases) - 1 and hi > end:
                    break
                out[p].append((lab, freq[lab]))
                break
    return [sorted(lst, key=lambda kv: (-kv[1], kv[0])) for lst in out]


def community_flow(
    records: Sequence[MessageRecord],
    early_window: tuple[int, int],
    late_window: tuple[int, int],
    seed: int = 0,
    resolution: float = 1.0,
    runs: int = 1,
    top_k: int = 10,
) -> CommunityFlow:
    """Users moving between semantic communities of two time windows.

    Windows are inclusive day ranges (day 1 = first corpus day). Each window
    gets its own semantic partition; a user belongs to the community holding
    most of their hashtag uses in that window (lower id on ties), or to the
    trailing "absent" row/column when they have none there.
    """
    for lo, hi in (early_window, late_window):
        if lo > hi:
            raise ValueError("empty window")
    if not records:
        return CommunityFlow(None, None, np.zeros((1, 1), dtype=np.int64), [ABSENT], [ABSENT], [], [])
    day_of = day_number(records)
    early = [r for r in records if early_window[0] <= day_of(r) <= early_window[1]]
    late = [r for r in records if late_window[0] <= day_of(r) <= late_window[1]]

    p_early, top_early, users_early = _window_partition(early, seed, resolution, runs, top_k)
    p_late, top_late, users_late = _window_partition(late, seed, resolution, runs, top_k)
    n_e = p_early.n_communities if p_early else 0
    n_l = p_late.n_communities if p_late else 0

    matrix = np.zeros((n_e + 1, n_l + 1), dtype=np.int64)
    for user in set(users_early) | set(users_late):
        a = users_early.get(user, n_e)
        b = users_late.get(user, n_l)
        matrix[n_e if a is None else a, n_l if b is None else b] += 1
    rows = [f"C{i + 1}" for i in range(n_e)] + [ABSENT]
    cols = [f"C{i + 1}" for i in range(n_l)] + [ABSENT]
    return CommunityFlow(p_early, p_late, matrix, rows, cols, top_early, top_late)


def _window_partition(records, seed, resolution, runs, top_k):
    """Partition of one window plus each active user's plurality community (None if unattributable)."""
    users: dict[str, int | None] = {r.author: None for r in records}
    graph = project_semantic(build_bipartite(records))
    if graph.n_edges == 0:
        return None, [], users
    try:
        part = best_of_runs(graph, seed, runs, resolution)
    except CommunityError:
        return None, [], users
    comm_of = part.label_map()
    uses: dict[str, Counter] = defaultdict(Counter)
    tag_freq = Counter()
    for rec in records:
        for t in rec.hashtags:
            if t in comm_of:
                uses[rec.author][comm_of[t]] += 1
                tag_freq[t] += 1
    for user, counter in uses.items():
        best = max(counter.values())
        users[user] = min(c for c, v in counter.items() if v == best)
    top = []
    for c in range(part.n_communities):
        members = [(part.labels[i], tag_freq[part.labels[i]]) for i in part.members(c).tolist()]
        top.append(sorted(members, key=lambda kv: (-kv[1], kv[0]))[:top_k])
    return part, top, users
