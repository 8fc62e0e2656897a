"""Seed selection and DeGroot belief diffusion over a belief network."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .graph import BeliefNetwork
from .ingest import PostRecord

log = logging.getLogger(__name__)

STANDARD = "standard"
CLAMPED = "clamped"
MODES = (STANDARD, CLAMPED)

# Rows per work unit. Fixed so that chunk boundaries, and hence results,
# do not depend on the worker count.
CHUNK_ROWS = 1 << 16


@dataclass(frozen=True)
class DiffusionConfig:
    iterations: int = 3
    mode: str = CLAMPED

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class BeliefVector:
    ids: list[str]
    values: np.ndarray
    is_seed: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return {u: float(b) for u, b in zip(self.ids, self.values)}


def select_seeds(
    scores: Mapping[str, float],
    posts: Iterable[PostRecord],
    tau: float = 0.95,
    min_posts: int = 10,
) -> tuple[set[str], int]:
    """Users with at least ``min_posts`` posts scoring strictly above ``tau``.

    Returns the seed set and the number of scores whose post id is unknown.
    """
    author = {p.id: p.author for p in posts}
    hateful: dict[str, int] = {}
    unknown = 0
    for pid, s in scores.items():
        user = author.get(pid)
        if user is None:
            unknown += 1
            continue
        if s > tau:
            hateful[user] = hateful.get(user, 0) + 1
    if unknown:
        log.warning("%d scored posts not found in the corpus", unknown)
    return {u for u, c in hateful.items() if c >= min_posts}, unknown


def _propagate(net: BeliefNetwork, b: np.ndarray, out: np.ndarray, lo: int, hi: int) -> None:
    s, e = net.indptr[lo], net.indptr[hi]
    contrib = net.weights[s:e] * b[net.indices[s:e]]
    out[lo:hi] = np.add.reduceat(contrib, net.indptr[lo:hi] - s)


def diffuse(
    net: BeliefNetwork,
    seeds: Iterable[str],
    config: DiffusionConfig = DiffusionConfig(),
    threads: int = 1,
) -> BeliefVector:
    index = {u: i for i, u in enumerate(net.ids)}
    seed_list = list(seeds)
    missing = [u for u in seed_list if u not in index]
    if missing:
        log.warning("dropping %d seeds not present in the graph", len(missing))
    mask = np.zeros(net.n, dtype=bool)
    mask[[index[u] for u in seed_list if u in index]] = True
    values = run_degroot(net, mask, config.iterations, config.mode == CLAMPED, threads)
    return BeliefVector(list(net.ids), values, mask)


def run_degroot(
    net: BeliefNetwork,
    seed_mask: np.ndarray,
    iterations: int,
    clamped: bool,
    threads: int = 1,
) -> np.ndarray:
    """Iterate b <- W b from the seed indicator, double-buffered.

    Every row holds at least its self entry, which the reduction relies on.
    """
    n = net.n
    cur = seed_mask.astype(np.float64)
    if n == 0:
        return cur
    nxt = np.empty_like(cur)
    bounds = [(lo, min(lo + CHUNK_ROWS, n)) for lo in range(0, n, CHUNK_ROWS)]
    pool = ThreadPoolExecutor(threads) if threads > 1 and len(bounds) > 1 else None
    try:
        for _ in range(iterations):
            if pool is None:
                for lo, hi in bounds:
                    _propagate(net, cur, nxt, lo, hi)
            else:
                list(pool.map(lambda c: _propagate(net, cur, nxt, *c), bounds))
            if clamped:
                nxt[seed_mask] = 1.0
            # convex combinations stay in [0, 1]; clip rounding drift only
            np.clip(nxt, 0.0, 1.0, out=nxt)
            cur, nxt = nxt, cur
    finally:
        if pool is not None:
            pool.shutdown()
    return cur
