"""Post-level precision-recall curves and user-level detection metrics."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DataError
from .segmentation import HM, GroupAssignment

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float


def pr_curve(scores: Mapping[str, float], labels: Mapping[str, bool]) -> list[PRPoint]:
    """One point per distinct score threshold, predicting positive iff score >= t.

    A hard scorer (all scores in {0, 1}) cannot be thresholded and yields the
    single point at t = 1. Points are returned in ascending threshold order.
    """
    missing = [pid for pid in labels if pid not in scores]
    if missing:
        raise DataError(f"{len(missing)} labeled posts have no score, e.g. {missing[0]!r}")
    pairs = sorted(((scores[pid], bool(y)) for pid, y in labels.items()), reverse=True)
    n_pos = sum(y for _, y in pairs)
    if n_pos == 0:
        log.warning("no positive labels; precision-recall curve is empty")
        return []
    hard = all(s in (0.0, 1.0) for s, _ in pairs)
    points = []
    tp = fp = 0
    i = 0
    # sweep thresholds from high to low; all pairs with score >= t are positive
    while i < len(pairs):
        t = pairs[i][0]
        while i < len(pairs) and pairs[i][0] == t:
            if pairs[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        if hard and t != 1.0:
            continue
        points.append(PRPoint(t, tp / (tp + fp), tp / n_pos))
    points.reverse()
    return points


@dataclass
class UserEval:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    missing: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def user_level_eval(assignments: Iterable[GroupAssignment], labels: Mapping[str, bool]) -> UserEval:
    """Score HM membership as the positive prediction against user labels."""
    group = {a.user_id: a.group for a in assignments}
    present = {u: bool(y) for u, y in labels.items() if u in group}
    missing = len(labels) - len(present)
    if missing:
        log.warning("%d labeled users have no group assignment and are excluded", missing)
    if not present:
        raise DataError("no labeled users overlap the group assignments")
    tp = fp = fn = tn = 0
    for u, y in present.items():
        pred = group[u] == HM
        if pred and y:
            tp += 1
        elif pred:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return UserEval(tp, fp, fn, tn, precision, recall, f1_score(precision, recall), missing)


_TRUE = {"1", "true", "yes", "hateful", "hate", "positive"}
_FALSE = {"0", "false", "no", "non_hateful", "normal", "negative"}


def read_binary_labels(path, id_column: str = "user_id") -> dict[str, bool]:
    """Read ``<id>,label`` CSV with 0/1 or textual boolean labels."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    out: dict[str, bool] = {}
    with fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if line_no == 1 and row[0].strip() in (id_column, "id", "post_id", "user_id"):
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{line_no}: expected id,label")
            key, raw = row[0].strip(), row[1].strip().lower()
            if raw in _TRUE:
                val = True
            elif raw in _FALSE:
                val = False
            else:
                raise DataError(f"{path}:{line_no}: bad label {row[1]!r}")
            if key in out:
                raise DataError(f"{path}:{line_no}: duplicate id {key!r}")
            out[key] = val
    return out
