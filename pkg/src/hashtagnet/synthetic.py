"""Synthetic corpora with planted hashtag communities, for self-contained testing."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from hashtagnet.corpus import MessageRecord

START = datetime(2011, 10, 26, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planted-community generator.

    ``schedule`` optionally lists ``(last_day, weights)`` phases: messages on
    days up to ``last_day`` pick their community with the given relative
    weights. Without it every community is equally active throughout.
    """

    n_users: int = 600
    n_hashtags: int = 5000
    n_messages: int = 10_000
    n_communities: int = 6
    mixing: float = 0.1
    n_days: int = 175
    min_tags: int = 2
    max_tags: int = 4
    # Zipf exponents of hashtag popularity and user activity within a community
    popularity_exponent: float = 1.2
    activity_exponent: float = 1.0
    schedule: tuple[tuple[int, tuple[float, ...]], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mixing <= 1.0:
            raise ValueError("mixing must be in [0, 1]")
        if self.n_communities < 1:
            raise ValueError("need at least one community")
        if self.n_users < self.n_communities or self.n_hashtags < self.n_communities * self.max_tags:
            raise ValueError("too few users or hashtags for the planted communities")
        if not 1 <= self.min_tags <= self.max_tags:
            raise ValueError("bad tags-per-message range")
        for last_day, weights in self.schedule:
            if len(weights) != self.n_communities or min(weights) < 0 or sum(weights) <= 0:
                raise ValueError(f"bad schedule weights for phase ending day {last_day}")


@dataclass
class PlantedTruth:
    hashtag_community: dict[str, int] = field(default_factory=dict)
    user_community: dict[str, int] = field(default_factory=dict)

    @property
    def n_communities(self) -> int:
        return len(set(self.hashtag_community.values()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)


def _zipf_weights(n: int, exponent: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** exponent
    return w / w.sum()


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[MessageRecord], PlantedTruth]:
    rng = np.random.default_rng(spec.seed)
    c = spec.n_communities
    tag_comm = np.arange(spec.n_hashtags) % c
    user_comm = np.arange(spec.n_users) % c
    tags = [f"h{i:05d}" for i in range(spec.n_hashtags)]
    users = [f"u{i:05d}" for i in range(spec.n_users)]

    vocab = [np.flatnonzero(tag_comm == k) for k in range(c)]
    vocab_p = [_zipf_weights(len(v), spec.popularity_exponent) for v in vocab]
    members = [np.flatnonzero(user_comm == k) for k in range(c)]
    members_p = [_zipf_weights(len(m), spec.activity_exponent) for m in members]
    # global popularity keeps each tag's within-community rank
    global_p = np.concatenate(vocab_p)[np.argsort(np.concatenate(vocab))] / c

    phase_ends = np.array([d for d, _ in spec.schedule], dtype=np.int64)
    phase_w = [np.asarray(w, dtype=np.float64) / sum(w) for _, w in spec.schedule]
    uniform = np.full(c, 1.0 / c)

    days = np.sort(rng.integers(1, spec.n_days + 1, size=spec.n_messages))
    records = []
    for i, day in enumerate(days.tolist()):
        p = uniform
        if len(phase_ends):
            ph = int(np.searchsorted(phase_ends, day))
            p = phase_w[min(ph, len(phase_w) - 1)]
        k = int(rng.choice(c, p=p))
        author = int(members[k][rng.choice(len(members[k]), p=members_p[k])])
        n_tags = int(rng.integers(spec.min_tags, spec.max_tags + 1))
        if rng.random() < spec.mixing:
            picked = rng.choice(spec.n_hashtags, size=n_tags, replace=False, p=global_p)
        else:
            picked = vocab[k][rng.choice(len(vocab[k]), size=n_tags, replace=False, p=vocab_p[k])]
        ts = START + timedelta(days=day - 1, seconds=int(rng.integers(0, 86400)))
        records.append(MessageRecord(f"m{i:06d}", users[author], tuple(tags[t] for t in picked.tolist()), ts))

    truth = PlantedTruth(
        {tags[i]: int(tag_comm[i]) for i in range(spec.n_hashtags)},
        {users[i]: int(user_comm[i]) for i in range(spec.n_users)},
    )
    return records, truth
