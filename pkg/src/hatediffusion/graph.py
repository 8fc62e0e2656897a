"""Weighted repost network and its belief-network transform.

A repost edge (A, B) with weight w means user A reposted w items originally
authored by B. Every node also carries a self-loop count of its own authored
content. The belief network reverses the repost edges (A listens to B) and
normalizes each receiver's incoming weights, self included, to sum to one.
"""
from __future__ import annotations

import logging
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import DataError
from .ingest import ORIGINAL, REPLY, REPOST, PostRecord

log = logging.getLogger(__name__)

SELF_LOOP_POLICIES = {
    "originals": (ORIGINAL,),
    "originals+replies": (ORIGINAL, REPLY),
    "all": (ORIGINAL, REPLY, REPOST),
}
DEFAULT_SELF_LOOP = "originals+replies"


def _csr(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray):
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols.astype(np.int32, copy=False), vals


@dataclass
class RepostGraph:
    """Directed repost graph in CSR form, rows are reposters.

    ``ids`` is sorted, so node index order equals id order.
    """

    ids: list[str]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    self_loops: np.ndarray
    unresolved: int = 0

    def __post_init__(self):
        self.index = {u: i for i, u in enumerate(self.ids)}
        self._reverse = None

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0])

    @classmethod
    def from_maps(cls, edges: dict, self_loops: dict, nodes: Iterable[str] = (), unresolved: int = 0):
        node_set = set(nodes) | set(self_loops)
        for a, b in edges:
            node_set.update((a, b))
        ids = sorted(node_set)
        index = {u: i for i, u in enumerate(ids)}
        n = len(ids)
        items = [(index[a], index[b], w) for (a, b), w in edges.items() if w > 0]
        if items:
            arr = np.array(items, dtype=np.int64)
            rows, cols, vals = arr[:, 0], arr[:, 1], arr[:, 2]
        else:
            rows = cols = vals = np.zeros(0, dtype=np.int64)
        indptr, indices, weights = _csr(n, rows, cols, vals.astype(np.int64))
        loops = np.zeros(n, dtype=np.int64)
        for u, c in self_loops.items():
            loops[index[u]] = c
        return cls(ids, indptr, indices, weights, loops, unresolved)

    def edge_map(self) -> dict[tuple[str, str], int]:
        out = {}
        for i in range(self.n):
            for k in range(self.indptr[i], self.indptr[i + 1]):
                out[(self.ids[i], self.ids[self.indices[k]])] = int(self.weights[k])
        return out

    def self_loop_map(self) -> dict[str, int]:
        return {u: int(c) for u, c in zip(self.ids, self.self_loops)}

    def reverse(self):
        """CSR of in-edges: row B lists the reposters of B."""
        if self._reverse is None:
            rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
            self._reverse = _csr(self.n, self.indices.astype(np.int64), rows, self.weights)
        return self._reverse

    def out_degree(self, weighted: bool = False) -> np.ndarray:
        if weighted:
            return _row_sums(self.indptr, self.weights.astype(np.float64))
        return np.diff(self.indptr)

    def in_degree(self, weighted: bool = False) -> np.ndarray:
        if weighted:
            return np.bincount(self.indices, weights=self.weights, minlength=self.n)
        return np.bincount(self.indices, minlength=self.n)


def _row_sums(indptr: np.ndarray, vals: np.ndarray) -> np.ndarray:
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    nonempty = indptr[1:] > indptr[:-1]
    if vals.size:
        out[nonempty] = np.add.reduceat(vals, indptr[:-1][nonempty])
    return out


def resolve_repost_target(post: PostRecord, lookup: dict[str, PostRecord]) -> Optional[str]:
    """Author credited for a repost, following repost chains to their root."""
    if post.root_author:
        return post.root_author
    seen = {post.id}
    parent = lookup.get(post.parent_id) if post.parent_id else None
    while parent is not None:
        if parent.kind != REPOST:
            return parent.author
        if parent.root_author:
            return parent.root_author
        if parent.id in seen or not parent.parent_id:
            return None
        seen.add(parent.id)
        parent = lookup.get(parent.parent_id)
    return None


def build_repost_graph(
    posts: Iterable[PostRecord],
    nodes: Iterable[str] = (),
    self_loop: str = DEFAULT_SELF_LOOP,
) -> RepostGraph:
    if self_loop not in SELF_LOOP_POLICIES:
        raise ValueError(f"unknown self-loop policy {self_loop!r}")
    counted = SELF_LOOP_POLICIES[self_loop]
    posts = list(posts)
    lookup = {p.id: p for p in posts}
    edges: Counter = Counter()
    loops: Counter = Counter()
    node_set = set(nodes)
    unresolved = 0
    for p in posts:
        node_set.add(p.author)
        if p.kind in counted:
            loops[p.author] += 1
        if p.kind != REPOST:
            continue
        target = resolve_repost_target(p, lookup)
        if target is None:
            unresolved += 1
            continue
        if target == p.author:
            if REPOST not in counted:
                loops[p.author] += 1
            continue
        edges[(p.author, target)] += 1
    if unresolved:
        log.info("dropped %d reposts with unresolvable targets", unresolved)
    return RepostGraph.from_maps(edges, loops, node_set, unresolved)


@dataclass
class BeliefNetwork:
    """Row-stochastic influence lists; row i holds (source j, w_ij) sorted by j."""

    ids: list[str]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    def influence(self, user: str) -> dict[str, float]:
        i = self.ids.index(user)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {self.ids[j]: float(w) for j, w in zip(self.indices[lo:hi], self.weights[lo:hi])}

    def row_sums(self) -> np.ndarray:
        return _row_sums(self.indptr, self.weights)

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        m[rows, self.indices] = self.weights
        return m


def to_belief_network(graph: RepostGraph) -> BeliefNetwork:
    n = graph.n
    edge_rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(graph.indptr))
    self_idx = np.arange(n, dtype=np.int64)
    rows = np.concatenate([edge_rows, self_idx])
    cols = np.concatenate([graph.indices.astype(np.int64), self_idx])
    vals = np.concatenate([graph.weights, graph.self_loops]).astype(np.float64)
    indptr, indices, raw = _csr(n, rows, cols, vals)
    totals = _row_sums(indptr, raw)
    empty = totals == 0
    if empty.any():
        # every row contains its self entry, so a zero total means all-zero weights
        row_of = np.repeat(np.arange(n), np.diff(indptr))
        self_pos = np.flatnonzero(indices == row_of)
        raw[self_pos[empty[row_of[self_pos]]]] = 1.0
        totals[empty] = 1.0
    row_of = np.repeat(np.arange(n), np.diff(indptr))
    weights = raw / totals[row_of]
    return BeliefNetwork(list(graph.ids), indptr, indices, weights)


# --- binary cache -----------------------------------------------------------

MAGIC = b"HDRG"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


def save_graph(graph: RepostGraph, path) -> None:
    """Write the graph cache; the layout is documented in docs/cache_format.md."""
    encoded = [u.encode("utf-8") for u in graph.ids]
    offsets = np.zeros(graph.n + 1, dtype="<u8")
    np.cumsum([len(b) for b in encoded], out=offsets[1:])
    rptr, ridx, rw = graph.reverse()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, graph.n, graph.n_edges, graph.unresolved))
        fh.write(offsets.tobytes())
        fh.write(b"".join(encoded))
        fh.write(graph.self_loops.astype("<i8").tobytes())
        for ptr, idx, w in ((graph.indptr, graph.indices, graph.weights), (rptr, ridx, rw)):
            fh.write(ptr.astype("<i8").tobytes())
            fh.write(idx.astype("<i4").tobytes())
            fh.write(w.astype("<i8").tobytes())


def load_graph(path) -> RepostGraph:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read graph cache {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise DataError(f"{path}: truncated graph cache")
    magic, version, n, m, unresolved = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataError(f"{path}: not a graph cache")
    if version != VERSION:
        raise DataError(f"{path}: unsupported cache version {version}")
    pos = _HEADER.size

    def take(dtype, count):
        nonlocal pos
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        pos += arr.nbytes
        return arr

    try:
        offsets = take("<u8", n + 1)
        blob = data[pos : pos + int(offsets[-1])]
        pos += int(offsets[-1])
        ids = [blob[offsets[i] : offsets[i + 1]].decode("utf-8") for i in range(n)]
        loops = take("<i8", n).astype(np.int64)
        indptr = take("<i8", n + 1).astype(np.int64)
        indices = take("<i4", m).astype(np.int32)
        weights = take("<i8", m).astype(np.int64)
        rev = (take("<i8", n + 1).astype(np.int64), take("<i4", m).astype(np.int32), take("<i8", m).astype(np.int64))
    except ValueError as exc:
        raise DataError(f"{path}: truncated graph cache") from exc
    g = RepostGraph(ids, indptr, indices, weights, loops, int(unresolved))
    g._reverse = rev
    return g
