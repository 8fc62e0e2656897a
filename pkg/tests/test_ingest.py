import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatediffusion.errors import DataError
from hatediffusion.ingest import (
    PostRecord,
    corpus_stats,
    ingest_to_cache,
    load_cache,
    parse_posts,
    parse_timestamp,
    parse_users,
    post_to_dict,
    user_to_dict,
)


def lines(*records):
    return io.StringIO("".join(json.dumps(r) + "\n" for r in records))


FIXTURE = [
    {"id": "p1", "author": "u", "kind": "original", "created_at": 100, "body": "hello"},
    {"id": "p2", "author": "u", "kind": "original", "created_at": 110},
    {"id": "p3", "author": "v", "kind": "reply", "parent_id": "p1", "created_at": 120},
    {"id": "p4", "author": "v", "kind": "repost", "parent_id": "p1", "root_author": "u", "created_at": 130},
    {"id": "p5", "author": "w", "kind": "repost", "parent_id": "p2", "created_at": 140},
]


def test_empty_stream():
    assert parse_posts(io.StringIO(""), strict=False) == ([], 0)
    assert parse_users(io.StringIO(""))[0] == []


def test_fixture_kind_tallies():
    posts, skipped = parse_posts(lines(*FIXTURE))
    assert skipped == 0 and len(posts) == 5
    s = corpus_stats(posts)
    assert (s.n_posts, s.n_replies, s.n_reposts) == (2, 1, 2)
    assert s.time_span == (100, 140)
    assert s.n_users == 3


def test_missing_author_skipped():
    posts, skipped = parse_posts(lines({"id": "x", "created_at": 1}, FIXTURE[0]))
    assert skipped == 1 and [p.id for p in posts] == ["p1"]


def test_strict_reports_line_number():
    with pytest.raises(DataError, match="line 2"):
        parse_posts(lines(FIXTURE[0], {"id": "x", "created_at": 1}), strict=True)


def test_malformed_json_and_blank_lines_count_as_skipped():
    stream = io.StringIO(json.dumps(FIXTURE[0]) + "\n{not json\n\n")
    posts, skipped = parse_posts(stream)
    assert len(posts) == 1 and skipped == 2


def test_kind_inference():
    posts, _ = parse_posts(lines(
        {"id": "a", "author": "u", "created_at": 1},
        {"id": "b", "author": "u", "created_at": 1, "parent_id": "a"},
        {"id": "c", "author": "v", "created_at": 1, "parent_id": "a", "root_author": "u"},
    ))
    assert [p.kind for p in posts] == ["original", "reply", "repost"]


def test_repost_without_target_is_malformed():
    _, skipped = parse_posts(lines({"id": "a", "author": "u", "kind": "repost", "created_at": 1}))
    assert skipped == 1


def test_timestamps_iso_and_epoch():
    assert parse_timestamp("2021-01-01T00:00:00Z") == 1609459200
    assert parse_timestamp("2021-01-01T01:00:00+01:00") == 1609459200
    assert parse_timestamp(1609459200) == 1609459200
    assert parse_timestamp("1609459200") == 1609459200
    with pytest.raises(ValueError):
        parse_timestamp("yesterday")


def test_users_dedupe_last_wins():
    users, skipped = parse_users(lines(
        {"id": "u", "followers": 1, "bio": "old"},
        {"id": "u", "followers": 5, "bio": "new", "registered_at": "2020-01-01T00:00:00Z"},
    ))
    assert len(users) == 1 and skipped == 1
    assert users[0].follower_count == 5 and users[0].bio == "new"
    assert users[0].registered_at == 1577836800


def test_negative_counts_rejected():
    with pytest.raises(DataError):
        parse_users(lines({"id": "u", "followers": -1}), strict=True)


def test_empty_corpus_stats():
    s = corpus_stats([])
    assert (s.n_users, s.n_posts, s.n_replies, s.n_reposts, s.time_span) == (0, 0, 0, 0, None)


def test_stats_merge_is_order_independent():
    posts, _ = parse_posts(lines(*FIXTURE))
    a, b = corpus_stats(posts[:2]), corpus_stats(posts[2:])
    ab, ba = a.merge(b), b.merge(a)
    full = corpus_stats(posts)
    for s in (ab, ba):
        assert (s.n_posts, s.n_replies, s.n_reposts, s.time_span) == (
            full.n_posts, full.n_replies, full.n_reposts, full.time_span)


def test_unreadable_source(tmp_path):
    with pytest.raises(DataError):
        ingest_to_cache(tmp_path / "missing.jsonl", None, tmp_path / "c")


def test_cache_round_trip(tmp_path):
    src = tmp_path / "posts.jsonl"
    src.write_text(lines(*FIXTURE).getvalue())
    corpus = ingest_to_cache(src, None, tmp_path / "cache")
    again = load_cache(tmp_path / "cache")
    assert again.posts == corpus.posts


ids = st.text("abcdef0123", min_size=1, max_size=6)
post_st = st.builds(
    PostRecord,
    id=ids,
    author=ids,
    kind=st.just("original"),
    created_at=st.integers(0, 2**40),
    body=st.one_of(st.none(), st.text(max_size=30)),
) | st.builds(
    PostRecord,
    id=ids,
    author=ids,
    kind=st.sampled_from(["reply", "repost"]),
    created_at=st.integers(0, 2**40),
    parent_id=ids,
    root_author=st.one_of(st.none(), ids),
    body=st.one_of(st.none(), st.text(max_size=30)),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(post_st, max_size=20, unique_by=lambda p: p.id))
def test_serialize_round_trip(posts):
    text = "".join(json.dumps(post_to_dict(p)) + "\n" for p in posts)
    parsed, skipped = parse_posts(io.StringIO(text))
    assert skipped == 0 and parsed == posts


@settings(max_examples=100, deadline=None)
@given(st.lists(post_st, max_size=20), st.randoms())
def test_skipped_plus_parsed_equals_lines_and_permutation(posts, rnd):
    text = [json.dumps(post_to_dict(p)) + "\n" for p in posts] + ["garbage\n"]
    parsed, skipped = parse_posts(io.StringIO("".join(text)))
    assert len(parsed) + skipped == len(text)
    uniq = list({p.id: p for p in posts}.values())
    shuffled = uniq[:]
    rnd.shuffle(shuffled)
    a, b = corpus_stats(uniq), corpus_stats(shuffled)
    assert a == b


def test_user_round_trip():
    users, _ = parse_users(lines({"id": "u", "registered_at": 5, "followers": 2, "followees": 3, "bio": "x"}))
    again, _ = parse_users(lines(user_to_dict(users[0])))
    assert again == users
