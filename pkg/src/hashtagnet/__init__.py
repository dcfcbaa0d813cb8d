"""Hashtag/user network analysis of message corpora.

Build the bipartite user-hashtag graph, its semantic (hashtag) and interest
(user) projections, and run distributional statistics, null-model robustness
experiments, Louvain communities and temporal evolution metrics on them.
"""

from hashtagnet.corpus import (
    CorpusConfig,
    MessageRecord,
    filter_records,
    normalize_hashtag,
    parse_records,
)
from hashtagnet.graph import (
    BipartiteGraph,
    WeightedGraph,
    build_bipartite,
    project_interest,
    project_semantic,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph",
    "CorpusConfig",
    "MessageRecord",
    "WeightedGraph",
    "build_bipartite",
    "filter_records",
    "normalize_hashtag",
    "parse_records",
    "project_interest",
    "project_semantic",
]
