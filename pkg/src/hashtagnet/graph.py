"""Bipartite user-hashtag graph and its two weighted projections."""

from __future__ import annotations

from typing import Iterable, Sequence
from xml.etree import ElementTree as ET

import numpy as np
from scipy import sparse

from hashtagnet.corpus import MessageRecord

COOCCURRENCE_SCOPES = ("tweet", "user")
PROJECTIONS = ("semantic", "interest")

# pair keys are buffered up to this many entries before being reduced
_CHUNK = 4_000_000


class WeightedGraph:
    """Undirected simple graph with positive integer edge weights.

    Vertices are dense integers ``0..n-1`` with a string label each. Every
    edge is stored once with ``src < dst``, sorted; adjacency is exposed
    symmetrically through :meth:`neighbors` and :meth:`adjacency`.
    """

    def __init__(self, labels: Sequence[str], src, dst, weight):
        self.labels = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("duplicate vertex labels")
        n = len(self.labels)

        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        weight = np.asarray(weight, dtype=np.int64).ravel()
        if not (len(src) == len(dst) == len(weight)):
            raise ValueError("edge arrays differ in length")
        if len(src):
            if np.any(src == dst):
                raise ValueError("self-loops are not allowed")
            if min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(weight < 1):
                raise ValueError("edge weights must be >= 1")
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        order = np.lexsort((hi, lo))
        lo, hi, weight = lo[order], hi[order], weight[order]
        if len(lo) > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise ValueError("duplicate edges")
        for arr in (lo, hi, weight):
            arr.flags.writeable = False
        self.src, self.dst, self.weight = lo, hi, weight

        self.degree = np.bincount(lo, minlength=n) + np.bincount(hi, minlength=n)
        self.strength = np.bincount(lo, weights=weight, minlength=n).astype(np.int64) + np.bincount(
            hi, weights=weight, minlength=n
        ).astype(np.int64)
        self.degree.flags.writeable = False
        self.strength.flags.writeable = False
        self._csr = None

    @classmethod
    def from_edges(cls, labels: Sequence[str], edges: Iterable[tuple[int, int, int]]) -> WeightedGraph:
        edges = list(edges)
        if not edges:
            return cls(labels, [], [], [])
        src, dst, w = zip(*edges)
        return cls(labels, src, dst, w)

    @classmethod
    def from_labeled_edges(cls, edges: Iterable[tuple[str, str, int]], labels: Sequence[str] = ()) -> WeightedGraph:
        """Build from ``(label, label, weight)`` triples; vertices in first-occurrence order."""
        index = {lab: i for i, lab in enumerate(labels)}
        triples = []
        for a, b, w in edges:
            ia = index.setdefault(a, len(index))
            ib = index.setdefault(b, len(index))
            triples.append((ia, ib, w))
        return cls.from_edges(list(index), triples)

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def total_weight(self) -> int:
        return int(self.weight.sum())

    def __repr__(self):
        return f"WeightedGraph(n={self.n_vertices}, m={self.n_edges}, W={self.total_weight})"

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric weighted adjacency matrix in CSR form (cached)."""
        if self._csr is None:
            n = self.n_vertices
            rows = np.concatenate([self.src, self.dst])
            cols = np.concatenate([self.dst, self.src])
            data = np.concatenate([self.weight, self.weight])
            csr = sparse.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64)
            csr.sort_indices()
            self._csr = csr
        return self._csr

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency()
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def neighbor_weights(self, i: int) -> np.ndarray:
        a = self.adjacency()
        return a.data[a.indptr[i] : a.indptr[i + 1]]

    def edges(self):
        """Iterate ``(i, j, w)`` with ``i < j``."""
        return zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist())

    def labeled_edges(self):
        lab = self.labels
        for i, j, w in self.edges():
            yield lab[i], lab[j], w

    def edge_label_set(self) -> set[tuple[str, str]]:
        """Edges as unordered label pairs (sorted tuples)."""
        lab = self.labels
        return {(a, b) if a <= b else (b, a) for a, b in ((lab[i], lab[j]) for i, j, _ in self.edges())}

    def weight_of(self, i: int, j: int) -> int:
        return int(self.adjacency()[i, j])


class BipartiteGraph:
    """Users on one side, hashtags on the other, messages as incidence."""

    def __init__(self, users, hashtags, messages):
        self.users = tuple(users)
        self.hashtags = tuple(hashtags)
        self.user_index = {u: i for i, u in enumerate(self.users)}
        self.hashtag_index = {h: i for i, h in enumerate(self.hashtags)}
        # one (user, hashtag ids) pair per message, in corpus order
        self.messages = tuple((int(u), tuple(tags)) for u, tags in messages)

        user_tags = [set() for _ in self.users]
        tag_users = [set() for _ in self.hashtags]
        for u, tags in self.messages:
            user_tags[u].update(tags)
            for h in tags:
                tag_users[h].add(u)
        self.user_hashtags = tuple(frozenset(s) for s in user_tags)
        self.hashtag_users = tuple(frozenset(s) for s in tag_users)
        if any(not s for s in self.hashtag_users):
            raise ValueError("hashtag vertex without incident messages")

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_hashtags(self) -> int:
        return len(self.hashtags)

    def __repr__(self):
        return f"BipartiteGraph(users={self.n_users}, hashtags={self.n_hashtags}, messages={len(self.messages)})"


def build_bipartite(records: Iterable[MessageRecord]) -> BipartiteGraph:
    users: dict[str, int] = {}
    tags: dict[str, int] = {}
    messages = []
    for rec in records:
        u = users.setdefault(rec.author, len(users))
        messages.append((u, tuple(tags.setdefault(h, len(tags)) for h in rec.hashtags)))
    return BipartiteGraph(list(users), list(tags), messages)


def project_semantic(bipartite: BipartiteGraph, cooccurrence: str = "tweet") -> WeightedGraph:
    """Hashtag co-occurrence network.

    Two hashtags are linked when they appear together; the weight is the
    number of distinct users responsible. With ``cooccurrence="tweet"`` the
    pair must share a single message, with ``"user"`` it is enough that the
    same user used both anywhere in the corpus.
    """
    if cooccurrence not in COOCCURRENCE_SCOPES:
        raise ValueError(f"unknown co-occurrence scope {cooccurrence!r}")
    n = bipartite.n_hashtags
    if cooccurrence == "user":
        groups = (_pair_keys(sorted(v), n) for v in bipartite.user_hashtags)
    else:
        per_user: dict[int, list[np.ndarray]] = {}
        for u, tags in bipartite.messages:
            if len(tags) > 1:
                per_user.setdefault(u, []).append(_pair_keys(sorted(tags), n))
        groups = (np.unique(np.concatenate(chunks)) for chunks in per_user.values())
    keys, counts = _count_keys(groups)
    return _projection(bipartite.hashtags, keys, counts, n)


def project_interest(bipartite: BipartiteGraph) -> WeightedGraph:
    """User network linking users whose hashtag vocabularies intersect.

    Weight is the number of distinct shared hashtags.
    """
    n = bipartite.n_users
    groups = (_pair_keys(sorted(us), n) for us in bipartite.hashtag_users)
    keys, counts = _count_keys(groups)
    return _projection(bipartite.users, keys, counts, n)


def project(bipartite: BipartiteGraph, kind: str, cooccurrence: str = "tweet") -> WeightedGraph:
    if kind == "semantic":
        return project_semantic(bipartite, cooccurrence)
    if kind == "interest":
        return project_interest(bipartite)
    raise ValueError(f"unknown projection {kind!r}")


def _pair_keys(ids: Sequence[int], n: int) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) < 2:
        return np.empty(0, dtype=np.int64)
    a, b = np.triu_indices(len(ids), 1)
    return ids[a] * n + ids[b]


def _count_keys(groups: Iterable[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Count how many groups contain each key (keys unique within a group)."""
    keys = np.empty(0, dtype=np.int64)
    counts = np.empty(0, dtype=np.int64)
    buf: list[np.ndarray] = []
    size = 0

    def reduce():
        nonlocal keys, counts, buf, size
        if not buf:
            return
        fresh = np.concatenate(buf)
        all_keys = np.concatenate([keys, fresh])
        all_counts = np.concatenate([counts, np.ones(len(fresh), dtype=np.int64)])
        keys, inv = np.unique(all_keys, return_inverse=True)
        counts = np.bincount(inv.ravel(), weights=all_counts, minlength=len(keys)).astype(np.int64)
        buf, size = [], 0

    for g in groups:
        if len(g):
            buf.append(g)
            size += len(g)
            if size >= _CHUNK:
                reduce()
    reduce()
    return keys, counts


def _projection(labels: Sequence[str], keys: np.ndarray, counts: np.ndarray, n: int) -> WeightedGraph:
    src, dst = keys // n, keys % n
    used = np.zeros(n, dtype=bool)
    used[src] = True
    used[dst] = True
    remap = np.cumsum(used) - 1
    kept = [lab for lab, u in zip(labels, used.tolist()) if u]
    return WeightedGraph(kept, remap[src], remap[dst], counts)


def write_edgelist(graph: WeightedGraph, fh) -> None:
    """Weighted edge list, one ``label<TAB>label<TAB>weight`` line per edge."""
    for a, b, w in graph.labeled_edges():
        fh.write(f"{a}\t{b}\t{w}\n")


def read_edgelist(fh) -> WeightedGraph:
    triples = []
    for lineno, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 2:
            parts.append("1")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'label<TAB>label<TAB>weight'")
        triples.append((parts[0], parts[1], int(parts[2])))
    return WeightedGraph.from_labeled_edges(triples)


def write_graphml(graph: WeightedGraph, fh) -> None:
    """GraphML document with a ``label`` node attribute and integer ``weight`` edges."""
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    ET.SubElement(root, "key", {"id": "label", "for": "node", "attr.name": "label", "attr.type": "string"})
    ET.SubElement(root, "key", {"id": "weight", "for": "edge", "attr.name": "weight", "attr.type": "int"})
    g = ET.SubElement(root, "graph", id="G", edgedefault="undirected")
    for i, lab in enumerate(graph.labels):
        node = ET.SubElement(g, "node", id=f"n{i}")
        ET.SubElement(node, "data", key="label").text = lab
    for i, j, w in graph.edges():
        edge = ET.SubElement(g, "edge", source=f"n{i}", target=f"n{j}")
        ET.SubElement(edge, "data", key="weight").text = str(w)
    ET.indent(root)
    fh.write(ET.tostring(root, encoding="unicode"))
    fh.write("\n")


def read_graphml(fh) -> WeightedGraph:
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    root = ET.parse(fh).getroot()
    g = root.find("g:graph", ns)
    ids, labels = {}, []
    for node in g.findall("g:node", ns):
        data = node.find("g:data[@key='label']", ns)
        ids[node.get("id")] = len(labels)
        labels.append(data.text if data is not None and data.text else node.get("id"))
    edges = []
    for edge in g.findall("g:edge", ns):
        data = edge.find("g:data[@key='weight']", ns)
        w = int(data.text) if data is not None else 1
        edges.append((ids[edge.get("source")], ids[edge.get("target")], w))
    return WeightedGraph.from_edges(labels, edges)

