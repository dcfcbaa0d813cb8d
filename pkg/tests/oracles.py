"""Independent reference implementations used only by the tests.

Everything here is deliberately naive (quadratic loops, exhaustive search)
and shares no code path with the package internals it checks.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from datetime import datetime, timedelta, timezone

import numpy as np
from scipy import special

from hashtagnet.corpus import MessageRecord

T0 = datetime(2011, 10, 26, tzinfo=timezone.utc)


def make_record(i, author, tags, day=0):
    return MessageRecord(f"m{i}", author, tuple(tags), T0 + timedelta(days=day, hours=1))


def random_corpus(seed, max_messages=50, max_users=10, max_tags=12, max_per_message=5, n_days=1):
    rnd = random.Random(seed)
    n_msg = rnd.randint(0, max_messages)
    users = [f"u{i}" for i in range(rnd.randint(1, max_users))]
    tags = [f"t{i}" for i in range(rnd.randint(1, max_tags))]
    out = []
    for i in range(n_msg):
        k = rnd.randint(0, min(max_per_message, len(tags)))
        out.append(make_record(i, rnd.choice(users), rnd.sample(tags, k), rnd.randrange(n_days)))
    return out


def semantic_pairs(records, scope="tweet"):
    """``{frozenset({h1, h2}): number of distinct users}`` by direct enumeration."""
    users_of = {}
    if scope == "tweet":
        for rec in records:
            for a in rec.hashtags:
                for b in rec.hashtags:
                    if a < b:
                        users_of.setdefault(frozenset((a, b)), set()).add(rec.author)
    else:
        vocab = {}
        for rec in records:
            vocab.setdefault(rec.author, set()).update(rec.hashtags)
        for user, tags in vocab.items():
            for a in tags:
                for b in tags:
                    if a < b:
                        users_of.setdefault(frozenset((a, b)), set()).add(user)
    return {p: len(u) for p, u in users_of.items()}


def interest_pairs(records):
    """``{frozenset({u1, u2}): shared hashtags}`` by direct vocabulary intersection."""
    vocab = {}
    for rec in records:
        vocab.setdefault(rec.author, set()).update(rec.hashtags)
    out = {}
    users = sorted(vocab)
    for a in users:
        for b in users:
            if a < b:
                shared = len(vocab[a] & vocab[b])
                if shared:
                    out[frozenset((a, b))] = shared
    return out


def graph_pairs(graph):
    return {frozenset((a, b)): w for a, b, w in graph.labeled_edges()}


def sample_discrete_power_law(gamma, n, x_min=1, seed=0):
    """Exact inverse-CDF sampling: smallest x with P(X >= x+1) < u <= P(X >= x)."""
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    norm = special.zeta(gamma, x_min)

    def ccdf(x):
        return special.zeta(gamma, x) / norm

    # tabulated CCDF over the head of the support, searched directly
    table_end = x_min + 100_000
    k = np.arange(x_min, table_end, dtype=np.float64)
    head = np.cumsum((k ** -gamma)[::-1])[::-1] + special.zeta(gamma, table_end)
    head /= norm
    out = np.empty(n, dtype=np.int64)
    in_head = u > special.zeta(gamma, table_end) / norm
    # head is decreasing; the answer is the last x with ccdf(x) >= u
    pos = np.searchsorted(-head, -u[in_head], side="right") - 1
    out[in_head] = x_min + pos
    # the rare deep-tail draws fall back to bisection on the zeta ratio
    u = u[~in_head]
    n = len(u)
    lo = np.full(n, float(table_end))
    hi = np.full(n, float(table_end) * 2)
    while True:
        grow = ccdf(hi) >= u
        if not grow.any():
            break
        hi[grow] *= 2
    while True:
        gap = hi - lo > 1
        if not gap.any():
            break
        mid = np.floor((lo + hi) / 2)
        ge = ccdf(mid) >= u
        lo = np.where(gap & ge, mid, lo)
        hi = np.where(gap & ~ge, mid, hi)
    out[~in_head] = lo.astype(np.int64)
    return out


def adjacency_matrix(graph):
    n = graph.n_vertices
    a = np.zeros((n, n))
    for i, j, w in graph.edges():
        a[i, j] = a[j, i] = w
    return a


def modularity_double_sum(graph, assignment, resolution=1.0):
    """Q = 1/2m sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j), literally."""
    a = adjacency_matrix(graph)
    k = a.sum(axis=1)
    m2 = a.sum()
    q = 0.0
    n = len(assignment)
    for i in range(n):
        for j in range(n):
            if assignment[i] == assignment[j]:
                q += a[i, j] - resolution * k[i] * k[j] / m2
    return q / m2


def set_partitions(n):
    """All set partitions of range(n) as restricted growth strings."""
    if n == 0:
        yield ()
        return
    rgs = [0] * n

    def rec(i, top):
        if i == n:
            yield tuple(rgs)
            return
        for c in range(top + 2):
            rgs[i] = c
            yield from rec(i + 1, max(top, c))

    rgs[0] = 0
    yield from rec(1, 0)


def exhaustive_best_modularity(graph):
    """Maximum modularity over every set partition (n <= 10)."""
    n = graph.n_vertices
    src = np.array(graph.src)
    dst = np.array(graph.dst)
    w = np.array(graph.weight, dtype=float)
    k = np.zeros(n)
    np.add.at(k, src, w)
    np.add.at(k, dst, w)
    m = w.sum()
    best, best_p = -np.inf, None
    for p in set_partitions(n):
        p = np.asarray(p)
        same = p[src] == p[dst]
        tot = np.bincount(p, weights=k)
        q = w[same].sum() / m - np.sum((tot / (2 * m)) ** 2)
        if q > best:
            best, best_p = q, p
    return best, best_p


def clique_union(sizes, bridges=()):
    """Disjoint cliques (plus optional bridge edges between given vertex pairs)."""
    from hashtagnet.graph import WeightedGraph

    edges, base = [], 0
    for s in sizes:
        edges += [(base + i, base + j, 1) for i, j in itertools.combinations(range(s), 2)]
        base += s
    edges += [(i, j, 1) for i, j in bridges]
    return WeightedGraph.from_edges([f"v{i}" for i in range(base)], edges)


def random_weighted_graph(seed, n_max=12, p=None, w_max=5):
    from hashtagnet.graph import WeightedGraph

    rnd = random.Random(seed)
    n = rnd.randint(2, n_max)
    p = rnd.uniform(0.15, 0.7) if p is None else p
    edges = [(i, j, rnd.randint(1, w_max)) for i, j in itertools.combinations(range(n), 2) if rnd.random() < p]
    return WeightedGraph.from_edges([f"v{i}" for i in range(n)], edges)


def components_bfs(graph, alive=None):
    n = graph.n_vertices
    alive = [True] * n if alive is None else alive
    nbrs = [[] for _ in range(n)]
    for i, j, _ in graph.edges():
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = [False] * n
    sizes = []
    for s in range(n):
        if not alive[s] or seen[s]:
            continue
        seen[s] = True
        q, size = deque([s]), 0
        while q:
            v = q.popleft()
            size += 1
            for w in nbrs[v]:
                if alive[w] and not seen[w]:
                    seen[w] = True
                    q.append(w)
        sizes.append(size)
    return sizes


def knn_double_loop(graph):
    n = graph.n_vertices
    deg = [0] * n
    nbrs = [[] for _ in range(n)]
    for i, j, _ in graph.edges():
        deg[i] += 1
        deg[j] += 1
        nbrs[i].append(j)
        nbrs[j].append(i)
    return {i: sum(deg[j] for j in nbrs[i]) / deg[i] for i in range(n) if deg[i]}


def log2_bin(x):
    """Index k with 2**k <= x < 2**(k+1), by repeated doubling."""
    k = 0
    while 2 ** (k + 1) <= x:
        k += 1
    return k


def binned_means(pairs):
    """``{bin: (mean x, mean y, count)}`` over (x, y) pairs with x >= 1."""
    acc = {}
    for x, y in pairs:
        b = log2_bin(x)
        sx, sy, c = acc.get(b, (0.0, 0.0, 0))
        acc[b] = (sx + x, sy + y, c + 1)
    return {b: (sx / c, sy / c, c) for b, (sx, sy, c) in sorted(acc.items())}


def heavy_tailed_graph(n=1000, m=2, seed=0):
    """Preferential-attachment graph (Barabasi-Albert style) built by hand."""
    from hashtagnet.graph import WeightedGraph

    rnd = random.Random(seed)
    edges = set()
    targets = list(range(m))
    repeated = []
    for v in range(m, n):
        chosen = set()
        while len(chosen) < m:
            chosen.add(rnd.choice(targets) if not repeated else rnd.choice(repeated))
        for t in chosen:
            edges.add((min(v, t), max(v, t)))
        repeated += list(chosen) + [v] * m
        targets = repeated
    return WeightedGraph.from_edges([f"v{i}" for i in range(n)], [(a, b, 1) for a, b in sorted(edges)])
