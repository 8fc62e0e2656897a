"""Annotation aggregation, agreement statistics and stratified sampling
for building a labeled post set."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .ingest import ORIGINAL, PostRecord

HATEFUL = "hateful"
NON_HATEFUL = "non_hateful"
OMITTED_MEAN3 = "omitted_mean3"
FILTERED = "filtered_low_agreement"
LABELS = (HATEFUL, NON_HATEFUL, OMITTED_MEAN3, FILTERED)

LIKERT = (1, 2, 3, 4, 5)
URL_MARKERS = ("http://", "https://", "www.")


@dataclass(frozen=True)
class AnnotationTriple:
    post_id: str
    scores: tuple[int, int, int]

    def __post_init__(self):
        if len(self.scores) != 3:
            raise ValueError(f"{self.post_id}: expected three scores")
        for s in self.scores:
            if isinstance(s, bool) or s not in LIKERT:
                raise ValueError(f"{self.post_id}: score {s!r} outside 1..5")


@dataclass(frozen=True)
class AggregatedLabel:
    post_id: str
    label: str
    mean_score: float


def label_triple(scores: Sequence[int]) -> str:
    if len(set(scores)) >= 3 or max(scores) - min(scores) > 2:
        return FILTERED
    total = sum(scores)  # compare the mean to 3 exactly via the integer sum
    if total > 9:
        return HATEFUL
    if total < 9:
        return NON_HATEFUL
    return OMITTED_MEAN3


def aggregate_annotations(triples: Iterable[AnnotationTriple]) -> tuple[list[AggregatedLabel], dict[str, int]]:
    out = []
    counts = dict.fromkeys(LABELS, 0)
    for t in triples:
        lab = label_triple(t.scores)
        counts[lab] += 1
        out.append(AggregatedLabel(t.post_id, lab, sum(t.scores) / 3))
    counts["total"] = len(out)
    return out, counts


def cohen_kappa(a: Sequence, b: Sequence, categories: Sequence = LIKERT) -> float:
    """Cohen's kappa for two raters over the same items."""
    n = len(a)
    if n == 0 or n != len(b):
        raise ValueError("raters must label the same non-empty item list")
    p_obs = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_exp = sum(ca[c] * cb[c] for c in categories) / (n * n)
    if p_exp == 1.0:
        # both raters used one identical category throughout
        return 1.0
    return (p_obs - p_exp) / (1.0 - p_exp)


def pairwise_kappa(triples: Sequence[AnnotationTriple]) -> tuple[float, float]:
    """Mean pairwise exact agreement and mean Cohen's kappa over the slot pairs."""
    triples = list(triples)
    if not triples:
        raise ValueError("no annotations")
    slots = list(zip(*(t.scores for t in triples)))
    pairs = list(combinations(range(3), 2))
    agreement = sum(
        sum(t.scores[i] == t.scores[j] for i, j in pairs) / len(pairs) for t in triples
    ) / len(triples)
    kappa = sum(cohen_kappa(slots[i], slots[j]) for i, j in pairs) / len(pairs)
    return agreement, kappa


def read_annotations(path) -> list[AnnotationTriple]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    out = []
    with fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if line_no == 1 and row[0].strip() == "post_id":
                continue
            try:
                if len(row) != 4:
                    raise ValueError("expected post_id,score1,score2,score3")
                out.append(AnnotationTriple(row[0].strip(), tuple(int(x) for x in row[1:])))
            except ValueError as exc:
                raise DataError(f"{path}:{line_no}: {exc}") from exc
    return out


def write_labels(path, labels: Iterable[AggregatedLabel]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["post_id", "label", "mean"])
        for lab in labels:
            w.writerow([lab.post_id, lab.label, repr(lab.mean_score)])


def is_eligible(post: PostRecord, min_chars: int = 10) -> bool:
    """Original post, long enough, without a URL."""
    if post.kind != ORIGINAL or not post.body or len(post.body) < min_chars:
        return False
    low = post.body.lower()
    return not any(m in low for m in URL_MARKERS)


def stratum_of(score: float, edges: Sequence[float]) -> int:
    """Index of the stratum holding ``score``, or -1.

    Strata are half-open ``[lo, hi)`` except the last, which also holds its
    upper edge so that a score equal to the top edge (1.0) is not lost.
    """
    last = len(edges) - 2
    for k in range(last + 1):
        lo, hi = edges[k], edges[k + 1]
        if lo <= score < hi or (k == last and score == hi):
            return k
    return -1


def stratified_sample(
    posts: Iterable[PostRecord],
    scores: Mapping[str, float],
    strata_edges: Sequence[float],
    per_stratum,
    rng_seed: int,
    min_chars: int = 10,
) -> list[str]:
    """Sample eligible post ids uniformly without replacement per score stratum."""
    edges = [float(e) for e in strata_edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("strata edges must be strictly ascending with at least two values")
    k = len(edges) - 1
    if isinstance(per_stratum, int):
        per_stratum = [per_stratum] * k
    per_stratum = list(per_stratum)
    if len(per_stratum) != k:
        raise ValueError(f"expected {k} per-stratum counts, got {len(per_stratum)}")
    buckets: list[list[str]] = [[] for _ in range(k)]
    for p in posts:
        if p.id in scores and is_eligible(p, min_chars):
            s = stratum_of(scores[p.id], edges)
            if s >= 0:
                buckets[s].append(p.id)
    rng = np.random.default_rng(rng_seed)
    picked: list[str] = []
    for bucket, want in zip(buckets, per_stratum):
        bucket.sort()
        if want >= len(bucket):
            picked.extend(bucket)
            continue
        idx = rng.choice(len(bucket), size=want, replace=False)
        picked.extend(bucket[i] for i in sorted(idx))
    return picked
