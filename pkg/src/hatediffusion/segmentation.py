"""Activity filtering and hate-monger / flirt / normal segmentation."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import DataError
from .ingest import ORIGINAL, REPLY, REPOST, PostRecord, UserRecord

log = logging.getLogger(__name__)

HM = "HM"
HM_TILDE = "HM_TILDE"
NORMAL = "N"
INACTIVE = "INACTIVE"
GROUPS = (HM, HM_TILDE, NORMAL)
ALL_GROUPS = GROUPS + (INACTIVE,)

SCORE_RANGE = "score_range"
POPULATION_QUANTILE = "population_quantile"

DAY = 86400.0


@dataclass
class ActivityProfile:
    user_id: str
    n_originals: int = 0
    n_replies: int = 0
    n_reposts: int = 0
    age_days: float = 0.0

    @property
    def n_items(self) -> int:
        return self.n_originals + self.n_replies + self.n_reposts


@dataclass(frozen=True)
class GroupAssignment:
    user_id: str
    group: str
    belief: float


def build_profiles(
    posts: Iterable[PostRecord],
    users: Iterable[UserRecord] = (),
    reference_time: Optional[int] = None,
) -> dict[str, ActivityProfile]:
    """Per-user activity counts and account age in days.

    Age runs from registration (or first observed activity when registration
    is unknown) to ``reference_time``, which defaults to the latest post.
    """
    profiles: dict[str, ActivityProfile] = {}
    first: dict[str, int] = {}
    latest = None
    for p in posts:
        prof = profiles.get(p.author)
        if prof is None:
            prof = profiles[p.author] = ActivityProfile(p.author)
        if p.kind == ORIGINAL:
            prof.n_originals += 1
        elif p.kind == REPLY:
            prof.n_replies += 1
        elif p.kind == REPOST:
            prof.n_reposts += 1
        if p.author not in first or p.created_at < first[p.author]:
            first[p.author] = p.created_at
        if latest is None or p.created_at > latest:
            latest = p.created_at
    ref = reference_time if reference_time is not None else latest
    registered = {}
    for u in users:
        profiles.setdefault(u.id, ActivityProfile(u.id))
        if u.registered_at is not None:
            registered[u.id] = u.registered_at
    for uid, prof in profiles.items():
        start = registered.get(uid, first.get(uid))
        if ref is None or start is None:
            prof.age_days = 0.0
        else:
            prof.age_days = max(0.0, (ref - start) / DAY)
    return profiles


def filter_active(
    profiles: Mapping[str, ActivityProfile],
    min_items: int = 5,
    min_age_days: float = 60,
) -> tuple[set[str], set[str]]:
    active, inactive = set(), set()
    for uid, prof in profiles.items():
        if prof.n_items >= min_items and prof.age_days >= min_age_days:
            active.add(uid)
        else:
            inactive.add(uid)
    return active, inactive


def assign_groups(
    beliefs: Mapping[str, float],
    active: set[str],
    theta_low: float = 0.25,
    theta_high: float = 0.75,
    mode: str = SCORE_RANGE,
) -> list[GroupAssignment]:
    """Label every user in ``beliefs`` or ``active``.

    ``score_range`` compares beliefs to the fixed thresholds; in
    ``population_quantile`` mode the thresholds are the ``theta_low`` and
    ``theta_high`` quantiles of the active users' beliefs.
    """
    if not 0.0 <= theta_low < theta_high <= 1.0:
        raise ValueError("need 0 <= theta_low < theta_high <= 1")
    users = sorted(set(beliefs) | set(active))
    lo, hi = theta_low, theta_high
    degenerate = False
    if mode == POPULATION_QUANTILE:
        vals = np.array([beliefs.get(u, 0.0) for u in users if u in active], dtype=np.float64)
        if vals.size:
            lo, hi = (float(q) for q in np.quantile(vals, [theta_low, theta_high]))
            degenerate = lo == hi
            if degenerate:
                log.warning("belief quantiles coincide at %g; all active users set to %s", lo, HM_TILDE)
    elif mode != SCORE_RANGE:
        raise ValueError(f"unknown segmentation mode {mode!r}")
    out = []
    for u in users:
        b = float(beliefs.get(u, 0.0))
        if u not in active:
            g = INACTIVE
        elif degenerate:
            g = HM_TILDE
        elif b >= hi:
            g = HM
        elif b < lo:
            g = NORMAL
        else:
            g = HM_TILDE
        out.append(GroupAssignment(u, g, b))
    return out


def group_counts(assignments: Iterable[GroupAssignment]) -> dict[str, int]:
    counts = dict.fromkeys(ALL_GROUPS, 0)
    for a in assignments:
        counts[a.group] += 1
    return counts


def write_groups(path, assignments: Iterable[GroupAssignment]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "group", "belief"])
        for a in assignments:
            w.writerow([a.user_id, a.group, repr(a.belief)])


def read_groups(path) -> list[GroupAssignment]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    out = []
    with fh:
        for row in csv.DictReader(fh):
            try:
                g = row["group"]
                if g not in ALL_GROUPS:
                    raise ValueError(f"unknown group {g!r}")
                out.append(GroupAssignment(row["user_id"], g, float(row["belief"])))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}: bad row {row}: {exc}") from exc
    return out
