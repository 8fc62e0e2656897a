"""Group-level statistics over the segmented user base."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import centrality
from .errors import DataError
from .graph import RepostGraph
from .ingest import KINDS, REPLY, PostRecord, UserRecord
from .segmentation import GROUPS, ActivityProfile, GroupAssignment

EMOTIONS = ("anger", "joy", "sadness", "fear", "love", "surprise")
TRIM_FRACTION = 0.025


def lower_median(values: Sequence[float]) -> float:
    """Median without interpolation: the lower middle element for even sizes."""
    s = sorted(values)
    if not s:
        raise ValueError("median of empty sample")
    return s[(len(s) - 1) // 2]


def trimmed(values: Sequence[float], fraction: float = TRIM_FRACTION) -> list[float]:
    """Sorted sample with ``floor(fraction * n)`` values cut from each tail."""
    s = sorted(values)
    cut = math.floor(fraction * len(s))
    return s[cut : len(s) - cut]


def describe(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    t = trimmed(arr.tolist())
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "median": float(lower_median(arr.tolist())),
        "std": float(arr.std()),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "trim_low": float(t[0]) if t else None,
        "trim_high": float(t[-1]) if t else None,
    }


def _members(assignments: Iterable[GroupAssignment], groups=GROUPS) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {g: [] for g in groups}
    for a in assignments:
        if a.group in out:
            out[a.group].append(a.user_id)
    for ids in out.values():
        ids.sort()
    return out


def profile_samples(
    assignments: Iterable[GroupAssignment],
    profiles: Mapping[str, ActivityProfile],
    users: Iterable[UserRecord] = (),
) -> dict[str, dict[str, list[float]]]:
    """Raw per-user metric values by group, the input to both stats and exports."""
    user_map = {u.id: u for u in users}
    out: dict[str, dict[str, list[float]]] = {}
    for g, ids in _members(assignments).items():
        if not ids:
            continue
        m = defaultdict(list)
        for uid in ids:
            p = profiles.get(uid, ActivityProfile(uid))
            m["posts"].append(p.n_originals)
            m["replies"].append(p.n_replies)
            m["reposts"].append(p.n_reposts)
            m["age_days"].append(p.age_days)
            u = user_map.get(uid)
            if u is None:
                continue
            if u.follower_count is not None:
                m["followers"].append(u.follower_count)
            if u.followee_count is not None:
                m["followees"].append(u.followee_count)
            m["bio_present"].append(1.0 if u.bio else 0.0)
            if u.bio:
                m["bio_length"].append(len(u.bio))
        out[g] = dict(m)
    return out


def group_profile_stats(
    assignments: Iterable[GroupAssignment],
    profiles: Mapping[str, ActivityProfile],
    users: Iterable[UserRecord] = (),
) -> dict[str, dict]:
    """Activity, popularity and biography statistics for each non-empty group."""
    out = {}
    for g, metrics in profile_samples(assignments, profiles, users).items():
        stats = {k: describe(v) for k, v in metrics.items() if v and k != "bio_present"}
        if metrics.get("bio_present"):
            stats["bio_present_fraction"] = float(np.mean(metrics["bio_present"]))
        stats["n_users"] = len(metrics["posts"])
        out[g] = stats
    return out


def content_share(
    assignments: Iterable[GroupAssignment],
    profiles: Mapping[str, ActivityProfile],
) -> dict[str, dict[str, float]]:
    """Share of each content kind (and all content) produced by each active group."""
    totals = {g: {"posts": 0, "replies": 0, "reposts": 0} for g in GROUPS}
    for g, ids in _members(assignments).items():
        for uid in ids:
            p = profiles.get(uid)
            if p is None:
                continue
            totals[g]["posts"] += p.n_originals
            totals[g]["replies"] += p.n_replies
            totals[g]["reposts"] += p.n_reposts
    for t in totals.values():
        t["all"] = t["posts"] + t["replies"] + t["reposts"]
    out = {}
    for kind in ("posts", "replies", "reposts", "all"):
        denom = sum(totals[g][kind] for g in GROUPS)
        out[kind] = {g: (totals[g][kind] / denom if denom else 0.0) for g in GROUPS}
    return out


@dataclass
class CentralityConfig:
    exact_threshold: int = 100_000
    pivots: int = 1000
    seed: int = 0
    weighted_pagerank: bool = True
    normalize_betweenness: bool = True
    damping: float = 0.85
    tol: float = 1e-10
    max_iter: int = 200
    threads: int = 1


@dataclass
class CentralityReport:
    ids: list[str]
    per_node: dict[str, np.ndarray]
    group_means: dict[str, dict[str, float]] = field(default_factory=dict)
    sampled: bool = False

    def to_dict(self) -> dict:
        return {"sampled_betweenness": self.sampled, "group_means": self.group_means}


CENTRALITY_COLUMNS = ("in_degree", "out_degree", "in_degree_weighted", "out_degree_weighted", "betweenness", "pagerank")


def centrality_suite(
    graph: RepostGraph,
    assignments: Iterable[GroupAssignment],
    config: CentralityConfig = CentralityConfig(),
) -> CentralityReport:
    # graph edges never include self-loops; those live in graph.self_loops
    sampled = graph.n > config.exact_threshold
    bc = centrality.betweenness(
        graph.indptr,
        graph.indices,
        normalized=config.normalize_betweenness,
        pivots=config.pivots if sampled else None,
        seed=config.seed,
        threads=config.threads,
    )
    pr = centrality.pagerank(
        graph.indptr,
        graph.indices,
        graph.weights if config.weighted_pagerank else None,
        damping=config.damping,
        tol=config.tol,
        max_iter=config.max_iter,
    )
    per_node = {
        "in_degree": centrality.degree_centrality(graph.in_degree().astype(np.float64)),
        "out_degree": centrality.degree_centrality(graph.out_degree().astype(np.float64)),
        "in_degree_weighted": centrality.degree_centrality(graph.in_degree(weighted=True)),
        "out_degree_weighted": centrality.degree_centrality(graph.out_degree(weighted=True)),
        "betweenness": bc,
        "pagerank": pr,
    }
    report = CentralityReport(list(graph.ids), per_node, sampled=sampled)
    for g, ids in _members(assignments).items():
        idx = [graph.index[u] for u in ids if u in graph.index]
        if not ids:
            continue
        # members missing from the graph have no edges and contribute zeros
        report.group_means[g] = {
            col: float(vals[idx].sum() / len(ids)) for col, vals in per_node.items()
        }
    return report


def degree_distribution(
    graph: RepostGraph,
    assignments: Iterable[GroupAssignment],
    direction: str = "in",
    weighted: bool = False,
) -> dict[str, list[tuple[float, float]]]:
    """Empirical p(k) per group as ascending (k, p) pairs."""
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    deg = graph.in_degree(weighted) if direction == "in" else graph.out_degree(weighted)
    out = {}
    for g, ids in _members(assignments).items():
        if not ids:
            continue
        ks = [deg[graph.index[u]] if u in graph.index else 0 for u in ids]
        vals, counts = np.unique(np.asarray(ks), return_counts=True)
        out[g] = [(float(k), c / len(ids)) for k, c in zip(vals, counts)]
    return out


def log_bin_edges(max_k: float, base: float = 2.0) -> list[float]:
    edges = [1.0]
    while edges[-1] <= max_k:
        edges.append(edges[-1] * base)
    return edges


def log_binned(pk: Sequence[tuple[float, float]], base: float = 2.0) -> list[dict]:
    """Re-bin a p(k) table into ``[base^i, base^(i+1))`` bins (k = 0 dropped).

    ``density`` divides each bin's mass by its width, as plotted on log axes.
    """
    positive = [(k, p) for k, p in pk if k >= 1]
    if not positive:
        return []
    edges = log_bin_edges(max(k for k, _ in positive), base)
    rows = []
    for lo, hi in zip(edges, edges[1:]):
        mass = sum(p for k, p in positive if lo <= k < hi)
        rows.append({"lo": lo, "hi": hi, "mass": mass, "density": mass / (hi - lo)})
    return rows


def prevalence_stats(
    posts: Iterable[PostRecord],
    scores: Mapping[str, float],
    tau: float = 0.95,
    n_users: Optional[int] = None,
) -> dict:
    """Hateful-post share, share of users with a hateful post, and reply share
    among hateful content against the corpus-wide reply share.

    A post is hateful when its score is strictly above ``tau``. The user share
    is taken over ``n_users`` (default: distinct authors in ``posts``).
    """
    n_scored = n_hateful = hateful_replies = 0
    kind_counts = dict.fromkeys(KINDS, 0)
    authors = set()
    hateful_users = set()
    for p in posts:
        kind_counts[p.kind] += 1
        authors.add(p.author)
        s = scores.get(p.id)
        if s is None:
            continue
        n_scored += 1
        if s > tau:
            n_hateful += 1
            hateful_users.add(p.author)
            if p.kind == REPLY:
                hateful_replies += 1
    total_posts = sum(kind_counts.values())
    users = n_users if n_users is not None else len(authors)
    return {
        "tau": tau,
        "n_scored": n_scored,
        "n_hateful": n_hateful,
        "hateful_share": n_hateful / n_scored if n_scored else 0.0,
        "n_users": users,
        "n_users_with_hateful": len(hateful_users),
        "user_share": len(hateful_users) / users if users else 0.0,
        "reply_share_hateful": hateful_replies / n_hateful if n_hateful else 0.0,
        "reply_share_overall": kind_counts[REPLY] / total_posts if total_posts else 0.0,
    }


@dataclass(frozen=True)
class AffectInput:
    post_id: str
    sentiment: float
    emotion: str


def read_affect(path) -> list[AffectInput]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    out = []
    with fh:
        for line_no, row in enumerate(csv.DictReader(fh), start=2):
            try:
                s = float(row["sentiment"])
                e = row["emotion"].strip().lower()
                if not 1.0 <= s <= 5.0:
                    raise ValueError(f"sentiment {s} outside [1, 5]")
                if e not in EMOTIONS:
                    raise ValueError(f"unknown emotion {e!r}")
                out.append(AffectInput(row["post_id"], s, e))
            except (KeyError, ValueError, AttributeError) as exc:
                raise DataError(f"{path}:{line_no}: {exc}") from exc
    return out


def affect_aggregation(
    assignments: Iterable[GroupAssignment],
    affect: Iterable[AffectInput],
    posts: Iterable[PostRecord],
) -> dict[str, dict]:
    """Emotion distribution and median post sentiment per group."""
    group_of = {a.user_id: a.group for a in assignments}
    author = {p.id: p.author for p in posts}
    emo = {g: dict.fromkeys(EMOTIONS, 0) for g in GROUPS}
    sent: dict[str, list[float]] = {g: [] for g in GROUPS}
    for a in affect:
        g = group_of.get(author.get(a.post_id))
        if g not in emo:
            continue
        emo[g][a.emotion] += 1
        sent[g].append(a.sentiment)
    out = {}
    for g in GROUPS:
        n = len(sent[g])
        if not n:
            continue
        out[g] = {
            "n_posts": n,
            "emotions": {e: emo[g][e] / n for e in EMOTIONS},
            "median_sentiment": lower_median(sent[g]),
        }
    return out
