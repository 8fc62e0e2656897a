"""Deterministic synthetic corpora with planted communities.

Randomness comes from :class:`CounterRNG`, a counter-based generator that
is easy to re-implement anywhere:

    key_k = (seed * 0x9E3779B97F4A7C15 + k * 0xD1B54A32D192ED03) mod 2**64
    z     = splitmix64_finalizer(key_k)
    u_k   = (z >> 11) * 2**-53                     # uniform in [0, 1)

where ``splitmix64_finalizer`` is
``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB;
z ^= z >> 31`` with all arithmetic modulo 2**64, and k = 0, 1, 2, ... counts
draws in generation order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import ORIGINAL, REPLY, REPOST, PostRecord, UserRecord, write_posts, write_users
from .keyfile import read_keyfile

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
STEP = 0xD1B54A32D192ED03
DAY = 86400


def splitmix64(z: int) -> int:
    z &= MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK
    z ^= z >> 31
    return z


class CounterRNG:
    def __init__(self, seed: int):
        self.base = (seed * GOLDEN) & MASK
        self.counter = 0

    def at(self, k: int) -> float:
        return (splitmix64(self.base + k * STEP) >> 11) * (1.0 / (1 << 53))

    def uniform(self) -> float:
        u = self.at(self.counter)
        self.counter += 1
        return u

    def below(self, n: int) -> int:
        return min(int(self.uniform() * n), n - 1)

    def geometric(self, mean: float) -> int:
        """Failures before the first success, with the given mean."""
        if mean <= 0:
            return 0
        p = 1.0 / (1.0 + mean)
        return int(math.log(1.0 - self.uniform()) / math.log(1.0 - p))

    def skip(self, rate: float) -> int:
        """Gap to the next success in a Bernoulli(rate) sequence."""
        if rate >= 1.0:
            return 0
        return int(math.log(1.0 - self.uniform()) / math.log(1.0 - rate))


@dataclass
class SynthConfig:
    n_users: int = 1000
    community_sizes: list[int] = field(default_factory=lambda: [100])
    intra_rate: float = 0.1
    cross_rate: float = 0.001
    posts_mean: float = 6.0
    replies_mean: float = 6.0
    max_reposts_per_pair: int = 3
    hate_communities: list[int] = field(default_factory=lambda: [0])
    hate_post_rate: float = 0.8
    background_hate_rate: float = 0.01
    span_days: int = 400
    start_time: int = 1_577_836_800  # 2020-01-01T00:00:00Z
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("intra_rate", "cross_rate", "hate_post_rate", "background_hate_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.n_users < 1:
            raise ValueError("n_users must be positive")
        if any(s < 0 for s in self.community_sizes) or sum(self.community_sizes) > self.n_users:
            raise ValueError("community sizes must be non-negative and sum to at most n_users")
        if any(not 0 <= c < len(self.community_sizes) for c in self.hate_communities):
            raise ValueError("hate_communities must index community_sizes")
        if self.span_days < 1 or self.max_reposts_per_pair < 1:
            raise ValueError("span_days and max_reposts_per_pair must be positive")

    @classmethod
    def from_keyfile(cls, path) -> "SynthConfig":
        raw = read_keyfile(path)
        kwargs = {}
        for key, value in raw.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown synth key {key!r}")
            if key in ("community_sizes", "hate_communities"):
                kwargs[key] = [int(x) for x in value.replace(" ", "").split(",") if x]
            elif key in ("n_users", "max_reposts_per_pair", "span_days", "start_time", "rng_seed"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


@dataclass
class SynthCorpus:
    posts: list[PostRecord]
    users: list[UserRecord]
    community: dict[str, int]
    hateful_users: set[str]
    scores: dict[str, float]
    affect: list[tuple[str, float, str]]


WORDS = ("weather", "news", "vote", "freedom", "coffee", "game", "market", "family", "truth", "media")
HATE_WORDS = ("grobnik", "vermint", "zorblat", "blorg")
EMOTION_ORDER = ("anger", "joy", "sadness", "fear", "love", "surprise")


def _pick_emotion(rng: CounterRNG, hateful: bool) -> str:
    cuts = (0.5, 0.75, 0.87, 0.95, 0.98) if hateful else (0.3, 0.85, 0.91, 0.96, 0.98)
    u = rng.uniform()
    for emo, c in zip(EMOTION_ORDER, cuts):
        if u < c:
            return emo
    return EMOTION_ORDER[-1]


def synth_network(config: SynthConfig) -> SynthCorpus:
    rng = CounterRNG(config.rng_seed)
    n = config.n_users
    width = len(str(n - 1))
    ids = [f"u{i:0{width}d}" for i in range(n)]
    bounds = []
    start = 0
    for size in config.community_sizes:
        bounds.append((start, start + size))
        start += size
    comm = [-1] * n
    for c, (lo, hi) in enumerate(bounds):
        for i in range(lo, hi):
            comm[i] = c
    hate_comms = set(config.hate_communities)
    t0 = config.start_time
    t1 = t0 + config.span_days * DAY

    users: list[UserRecord] = []
    reg_times: list[int] = []
    for i in range(n):
        reg = t0 - 100 * DAY + int(rng.uniform() * (t1 - t0 + 100 * DAY))
        reg_times.append(reg)
        followers = rng.geometric(200.0 if comm[i] in hate_comms else 30.0)
        followees = rng.geometric(60.0)
        bio = None
        if rng.uniform() < 0.4:
            bio = " ".join(WORDS[rng.below(len(WORDS))] for _ in range(1 + rng.below(12)))
        users.append(UserRecord(ids[i], reg, followers, followees, bio))

    posts: list[PostRecord] = []
    scores: dict[str, float] = {}
    affect: list[tuple[str, float, str]] = []
    originals: list[list[str]] = [[] for _ in range(n)]
    counter = 0

    def when(i: int) -> int:
        lo = max(reg_times[i], t0)
        return lo + int(rng.uniform() * max(t1 - lo, 1))

    def authored(i: int, kind: str, parent: str | None) -> str:
        nonlocal counter
        pid = f"p{counter:09d}"
        counter += 1
        hate_user = comm[i] in hate_comms
        rate = config.hate_post_rate if hate_user else config.background_hate_rate
        hateful = rng.uniform() < rate
        if hateful:
            score = max(round(0.95 + 0.05 * rng.uniform(), 6), 0.950001)
        else:
            score = round(0.9 * rng.uniform(), 6)
        words = [WORDS[rng.below(len(WORDS))] for _ in range(3 + rng.below(8))]
        if hateful:
            words.insert(rng.below(len(words)), HATE_WORDS[rng.below(len(HATE_WORDS))])
        posts.append(PostRecord(pid, ids[i], kind, when(i), parent, None, " ".join(words)))
        scores[pid] = score
        sentiment = round(1.0 + 4.0 * rng.uniform() * (0.8 if hateful else 1.0), 3)
        affect.append((pid, sentiment, _pick_emotion(rng, hateful)))
        return pid

    for i in range(n):
        for _ in range(1 + rng.geometric(config.posts_mean)):
            originals[i].append(authored(i, ORIGINAL, None))
    all_originals = [pid for lst in originals for pid in lst]
    for i in range(n):
        for _ in range(rng.geometric(config.replies_mean)):
            authored(i, REPLY, all_originals[rng.below(len(all_originals))])

    for a in range(n):
        c = comm[a]
        lo, hi = bounds[c] if c >= 0 else (0, 0)
        # same-community candidates (minus a itself), then everyone else
        inside = [j for j in range(lo, hi) if j != a]
        n_out = n - (hi - lo)
        targets: list[int] = []
        if config.intra_rate > 0 and inside:
            k = rng.skip(config.intra_rate)
            while k < len(inside):
                targets.append(inside[k])
                k += 1 + rng.skip(config.intra_rate)
        if config.cross_rate > 0 and n_out > 0:
            k = rng.skip(config.cross_rate)
            while k < n_out:
                j = k if k < lo else k + (hi - lo)
                if j != a:
                    targets.append(j)
                k += 1 + rng.skip(config.cross_rate)
        for b in targets:
            for _ in range(1 + rng.below(config.max_reposts_per_pair)):
                src = originals[b][rng.below(len(originals[b]))]
                pid = f"p{counter:09d}"
                counter += 1
                posts.append(PostRecord(pid, ids[a], REPOST, when(a), src, ids[b], None))

    community = {ids[i]: comm[i] for i in range(n)}
    hateful_users = {ids[i] for i in range(n) if comm[i] in hate_comms}
    return SynthCorpus(posts, users, community, hateful_users, scores, affect)


def write_synth(corpus: SynthCorpus, out_dir) -> dict[str, Path]:
    """Write all synthetic files in the ingest formats; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "posts": out / "posts.jsonl",
        "users": out / "users.jsonl",
        "ground_truth": out / "ground_truth.csv",
        "scores": out / "scores.csv",
        "affect": out / "affect.csv",
        "user_labels": out / "user_labels.csv",
    }
    write_posts(paths["posts"], corpus.posts)
    write_users(paths["users"], corpus.users)
    with open(paths["ground_truth"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "community", "is_hateful"])
        for uid in sorted(corpus.community):
            w.writerow([uid, corpus.community[uid], int(uid in corpus.hateful_users)])
    with open(paths["scores"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["post_id", "score"])
        for pid in sorted(corpus.scores):
            w.writerow([pid, repr(corpus.scores[pid])])
    with open(paths["affect"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["post_id", "sentiment", "emotion"])
        for row in sorted(corpus.affect):
            w.writerow([row[0], repr(row[1]), row[2]])
    with open(paths["user_labels"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "label"])
        for uid in sorted(corpus.community):
            w.writerow([uid, int(uid in corpus.hateful_users)])
    return paths
