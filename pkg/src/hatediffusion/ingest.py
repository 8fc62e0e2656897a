"""Streaming ingestion of post and user dumps.

Both dumps are newline-delimited JSON, one object per line. Posts carry
``id, author, kind, parent_id, root_author, created_at, body``; users carry
``id, registered_at, followers, followees, bio``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional

from .errors import DataError

log = logging.getLogger(__name__)

ORIGINAL = "original"
REPLY = "reply"
REPOST = "repost"
KINDS = (ORIGINAL, REPLY, REPOST)


@dataclass(frozen=True, slots=True)
class PostRecord:
    id: str
    author: str
    kind: str
    created_at: int
    parent_id: Optional[str] = None
    root_author: Optional[str] = None
    body: Optional[str] = None


@dataclass(frozen=True, slots=True)
class UserRecord:
    id: str
    registered_at: Optional[int] = None
    follower_count: Optional[int] = None
    followee_count: Optional[int] = None
    bio: Optional[str] = None


@dataclass
class CorpusStats:
    n_users: int = 0
    n_posts: int = 0
    n_replies: int = 0
    n_reposts: int = 0
    time_span: Optional[tuple[int, int]] = None

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        # n_users is not additive across shards of the same user table; callers
        # merging shards of posts should recompute it from the union of ids.
        span = _merge_span(self.time_span, other.time_span)
        return CorpusStats(
            self.n_users + other.n_users,
            self.n_posts + other.n_posts,
            self.n_replies + other.n_replies,
            self.n_reposts + other.n_reposts,
            span,
        )

    def to_dict(self) -> dict:
        return {
            "n_users": self.n_users,
            "n_posts": self.n_posts,
            "n_replies": self.n_replies,
            "n_reposts": self.n_reposts,
            "time_span": list(self.time_span) if self.time_span else None,
        }


def _merge_span(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (min(a[0], b[0]), max(a[1], b[1]))


def parse_timestamp(value) -> int:
    """Normalize an ISO-8601 string or epoch number to integer UTC seconds."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, (int, float)):
        return int(value // 1)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty timestamp")
        try:
            return int(float(text) // 1)
        except ValueError:
            pass
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp() // 1)
    raise ValueError(f"unsupported timestamp {value!r}")


def _opt_str(obj: dict, key: str) -> Optional[str]:
    v = obj.get(key)
    if v is None:
        return None
    if not isinstance(v, (str, int)) or isinstance(v, bool):
        raise ValueError(f"field {key!r} must be a string")
    v = str(v)
    return v or None


def _opt_count(obj: dict, *keys: str) -> Optional[int]:
    for key in keys:
        if key in obj and obj[key] is not None:
            v = obj[key]
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise ValueError(f"field {key!r} must be a count")
            n = int(v)
            if n != float(v) or n < 0:
                raise ValueError(f"field {key!r} must be a non-negative integer")
            return n
    return None


def post_from_dict(obj: dict) -> PostRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    pid = _opt_str(obj, "id")
    author = _opt_str(obj, "author")
    if pid is None:
        raise ValueError("missing id")
    if author is None:
        raise ValueError("missing author")
    parent = _opt_str(obj, "parent_id")
    root = _opt_str(obj, "root_author")
    kind = obj.get("kind")
    if kind in (None, ""):
        kind = REPOST if root else REPLY if parent else ORIGINAL
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if kind != ORIGINAL and parent is None and root is None:
        raise ValueError(f"{kind} without parent_id or root_author")
    if obj.get("created_at") is None:
        raise ValueError("missing created_at")
    created = parse_timestamp(obj["created_at"])
    body = obj.get("body")
    if body is not None and not isinstance(body, str):
        raise ValueError("body must be text")
    return PostRecord(pid, author, kind, created, parent, root, body)


def post_to_dict(post: PostRecord) -> dict:
    return {
        "id": post.id,
        "author": post.author,
        "kind": post.kind,
        "parent_id": post.parent_id,
        "root_author": post.root_author,
        "created_at": post.created_at,
        "body": post.body,
    }


def user_from_dict(obj: dict) -> UserRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    uid = _opt_str(obj, "id")
    if uid is None:
        raise ValueError("missing id")
    reg = obj.get("registered_at")
    reg = parse_timestamp(reg) if reg not in (None, "") else None
    bio = obj.get("bio")
    if bio is not None and not isinstance(bio, str):
        raise ValueError("bio must be text")
    return UserRecord(
        uid,
        reg,
        _opt_count(obj, "followers", "follower_count"),
        _opt_count(obj, "followees", "followee_count"),
        bio,
    )


def user_to_dict(user: UserRecord) -> dict:
    return {
        "id": user.id,
        "registered_at": user.registered_at,
        "followers": user.follower_count,
        "followees": user.followee_count,
        "bio": user.bio,
    }


def _records(stream: Iterable[str], convert, strict: bool, what: str) -> Iterator:
    """Yield (line_no, record or None) for every input line."""
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            yield line_no, None
            continue
        try:
            rec = convert(json.loads(line))
        except (ValueError, TypeError) as exc:
            if strict:
                raise DataError(f"{what} line {line_no}: {exc}") from exc
            log.debug("skipping %s line %d: %s", what, line_no, exc)
            yield line_no, None
            continue
        yield line_no, rec


def parse_posts(stream: Iterable[str], strict: bool = False) -> tuple[list[PostRecord], int]:
    """Parse newline-delimited post records.

    Returns the parsed posts and the number of skipped lines. Blank lines,
    malformed records and records superseded by a later duplicate id all
    count as skipped, so ``len(posts) + skipped`` equals the input line count.
    """
    by_id: dict[str, PostRecord] = {}
    skipped = 0
    for _, rec in _records(stream, post_from_dict, strict, "posts"):
        if rec is None:
            skipped += 1
            continue
        if rec.id in by_id:
            skipped += 1
            del by_id[rec.id]
        by_id[rec.id] = rec
    return list(by_id.values()), skipped


def parse_users(stream: Iterable[str], strict: bool = False) -> tuple[list[UserRecord], int]:
    """Parse newline-delimited user records, last record wins per id."""
    by_id: dict[str, UserRecord] = {}
    skipped = 0
    for _, rec in _records(stream, user_from_dict, strict, "users"):
        if rec is None:
            skipped += 1
            continue
        if rec.id in by_id:
            skipped += 1
        by_id[rec.id] = rec
    return list(by_id.values()), skipped


def corpus_stats(posts: Iterable[PostRecord], users: Iterable[UserRecord] = ()) -> CorpusStats:
    ids = {u.id for u in users}
    counts = {ORIGINAL: 0, REPLY: 0, REPOST: 0}
    lo = hi = None
    for p in posts:
        ids.add(p.author)
        counts[p.kind] += 1
        if lo is None or p.created_at < lo:
            lo = p.created_at
        if hi is None or p.created_at > hi:
            hi = p.created_at
    span = (lo, hi) if lo is not None else None
    return CorpusStats(len(ids), counts[ORIGINAL], counts[REPLY], counts[REPOST], span)


def _open(path) -> IO[str]:
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def read_posts(path, strict: bool = False) -> tuple[list[PostRecord], int]:
    with _open(path) as fh:
        return parse_posts(fh, strict)


def read_users(path, strict: bool = False) -> tuple[list[UserRecord], int]:
    with _open(path) as fh:
        return parse_users(fh, strict)


def write_jsonl(path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def write_posts(path, posts: Iterable[PostRecord]) -> None:
    write_jsonl(path, (post_to_dict(p) for p in posts))


def write_users(path, users: Iterable[UserRecord]) -> None:
    write_jsonl(path, (user_to_dict(u) for u in users))


@dataclass
class Corpus:
    """Parsed posts and users kept together with their statistics."""

    posts: list[PostRecord] = field(default_factory=list)
    users: list[UserRecord] = field(default_factory=list)
    skipped_posts: int = 0
    skipped_users: int = 0

    @property
    def stats(self) -> CorpusStats:
        return corpus_stats(self.posts, self.users)


POSTS_CACHE = "posts.jsonl"
USERS_CACHE = "users.jsonl"
STATS_CACHE = "corpus_stats.json"


def ingest_to_cache(posts_path, users_path, cache_dir, strict: bool = False) -> Corpus:
    """Parse both dumps and write normalized copies plus stats to ``cache_dir``."""
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    posts, sp = read_posts(posts_path, strict)
    users, su = read_users(users_path, strict) if users_path else ([], 0)
    posts.sort(key=lambda p: p.id)
    users.sort(key=lambda u: u.id)
    corpus = Corpus(posts, users, sp, su)
    write_posts(cache / POSTS_CACHE, posts)
    write_users(cache / USERS_CACHE, users)
    stats = corpus.stats.to_dict()
    stats["skipped_posts"] = sp
    stats["skipped_users"] = su
    (cache / STATS_CACHE).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    if sp or su:
        log.warning("skipped %d post lines and %d user lines", sp, su)
    return corpus


def load_cache(cache_dir) -> Corpus:
    cache = Path(cache_dir)
    posts_path = cache / POSTS_CACHE
    if not posts_path.exists():
        raise DataError(f"no ingested corpus in {cache} (run `ingest` first)")
    posts, _ = read_posts(posts_path, strict=True)
    users_path = cache / USERS_CACHE
    users = read_users(users_path, strict=True)[0] if users_path.exists() else []
    return Corpus(posts, users)
