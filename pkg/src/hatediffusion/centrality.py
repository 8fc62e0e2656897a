"""Structural centralities on the repost graph (self-loops excluded).

Betweenness uses Brandes' algorithm on unweighted hops, exact or with
seeded pivot sampling. PageRank is plain power iteration.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from .errors import ConvergenceError

SOURCE_CHUNK = 256


@njit(cache=True, nogil=True)
def _brandes_partial(indptr, indices, sources):
    n = indptr.shape[0] - 1
    bc = np.zeros(n)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    dist = np.full(n, -1, np.int64)
    order = np.empty(n, np.int64)
    for s in sources:
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]
        # dependency accumulation in reverse BFS order via successors
        for idx in range(tail - 1, -1, -1):
            v = order[idx]
            dv = dist[v]
            acc = 0.0
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] == dv + 1:
                    acc += sigma[v] / sigma[w] * (1.0 + delta[w])
            delta[v] = acc
            if v != s:
                bc[v] += acc
        for idx in range(tail):
            v = order[idx]
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
    return bc


def betweenness(
    indptr: np.ndarray,
    indices: np.ndarray,
    normalized: bool = False,
    pivots: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> np.ndarray:
    """Directed, unweighted betweenness.

    With ``pivots`` set (and smaller than n) only that many seeded source
    nodes are expanded and the sum is scaled by n / pivots. Sources are
    processed in fixed-size chunks summed in order, so the worker count
    never changes the result.
    """
    n = indptr.shape[0] - 1
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if pivots is not None and pivots < n:
        sources = np.random.default_rng(seed).choice(n, size=pivots, replace=False).astype(np.int64)
        scale = n / pivots
    else:
        sources = np.arange(n, dtype=np.int64)
        scale = 1.0
    chunks = [sources[i : i + SOURCE_CHUNK] for i in range(0, len(sources), SOURCE_CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: _brandes_partial(indptr, indices, c), chunks))
    else:
        parts = [_brandes_partial(indptr, indices, c) for c in chunks]
    bc = np.zeros(n)
    for p in parts:
        bc += p
    bc *= scale
    if normalized and n > 2:
        bc /= (n - 1) * (n - 2)
    return bc


def pagerank(
    indptr: np.ndarray,
    indices: np.ndarray,
    weights: np.ndarray | None = None,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """Power-iteration PageRank; dangling mass is spread uniformly.

    Raises ConvergenceError when the L1 change is still above ``tol``
    after ``max_iter`` iterations.
    """
    n = indptr.shape[0] - 1
    if n == 0:
        return np.zeros(0)
    w = np.ones(indices.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    out_w = np.bincount(rows, weights=w, minlength=n)
    dangling = out_w == 0
    share = np.divide(w, out_w[rows], out=np.zeros_like(w), where=out_w[rows] > 0)
    x = np.full(n, 1.0 / n)
    resid = np.inf
    for _ in range(max_iter):
        flow = np.bincount(indices, weights=x[rows] * share, minlength=n)
        nxt = damping * (flow + x[dangling].sum() / n) + (1.0 - damping) / n
        nxt /= nxt.sum()
        resid = float(np.abs(nxt - x).sum())
        x = nxt
        if resid < tol:
            return x
    raise ConvergenceError(f"PageRank did not converge in {max_iter} iterations (residual {resid:.3g})", resid)


def degree_centrality(degree: np.ndarray) -> np.ndarray:
    n = degree.shape[0]
    if n <= 1:
        return np.zeros(n)
    return degree / (n - 1)
