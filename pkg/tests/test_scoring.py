import pytest
from hypothesis import given
from hypothesis import strategies as st

from hatediffusion.errors import DataError
from hatediffusion.ingest import PostRecord
from hatediffusion.scoring import (
    Lexicon,
    lexicon_match,
    load_lexicon,
    load_scores,
    score_lexicon,
    write_scores,
)


def test_load_scores(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("post_id,score\np1,0.96\n")
    assert load_scores(f) == {"p1": 0.96}


def test_score_out_of_range(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("p1,1.2\n")
    with pytest.raises(DataError, match="outside"):
        load_scores(f)


def test_duplicate_score(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("p1,0.1\np1,0.2\n")
    with pytest.raises(DataError, match="duplicate"):
        load_scores(f)


def test_empty_scores_file(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("")
    assert load_scores(f) == {}


def test_scores_round_trip(tmp_path):
    scores = {"a": 0.1, "b": 1.0, "c": 0.3333333333333333}
    write_scores(tmp_path / "s.csv", scores)
    assert load_scores(tmp_path / "s.csv") == scores


def test_plural_expansion_default_on():
    lex = Lexicon(["kike"])
    assert lexicon_match("I hate kikes", lex) == (True, ["kike"])
    assert lexicon_match("I hate kikes", Lexicon(["kike"], plurals=False))[0] is False


def test_empty_body():
    assert lexicon_match("", Lexicon(["x"])) == (False, [])
    assert lexicon_match(None, Lexicon(["x"])) == (False, [])


def test_word_boundary():
    assert lexicon_match("scuntthorpe", Lexicon(["cunt"]))[0] is False
    assert lexicon_match("what a CUNT!", Lexicon(["cunt"]))[0] is True


def test_multi_word_terms():
    lex = Lexicon(["snarf weasel"])
    assert lexicon_match("you Snarf-Weasel", lex)[0] is True
    assert lexicon_match("snarf the weasel", lex)[0] is False
    assert lexicon_match("snarf weasels", lex)[0] is True


def test_lexicon_file_and_placeholder(tmp_path):
    f = tmp_path / "lex.txt"
    f.write_text("# comment\nfoo\nFoo\nbar baz  # inline\n\n")
    lex = load_lexicon(f)
    assert lex.terms == ["foo", "bar baz"]
    assert len(load_lexicon()) >= 1
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(DataError):
        load_lexicon(empty)


def test_score_lexicon_hard_scores():
    posts = [
        PostRecord("a", "u", "original", 0, body="a grobnik here"),
        PostRecord("b", "u", "reply", 0, parent_id="a", body="fine"),
        PostRecord("c", "u", "repost", 0, parent_id="a", root_author="u"),
    ]
    assert score_lexicon(posts, load_lexicon()) == {"a": 1.0, "b": 0.0}


words = st.text("abcXYZ -!", max_size=40)


@given(words, st.lists(st.text("abcxyz", min_size=1, max_size=4), min_size=1, max_size=4))
def test_case_insensitive(body, terms):
    lex = Lexicon(terms)
    assert lexicon_match(body, lex)[0] == lexicon_match(body.lower(), lex)[0]


@given(words, st.lists(st.text("abc", min_size=1, max_size=3), min_size=1, max_size=3), st.text("abc", min_size=1, max_size=3))
def test_monotone_in_lexicon(body, terms, extra):
    if lexicon_match(body, Lexicon(terms))[0]:
        assert lexicon_match(body, Lexicon(terms + [extra]))[0]
