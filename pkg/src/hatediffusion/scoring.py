"""Per-post hate scores: externally computed classifier output or a
keyword-lexicon baseline."""
from __future__ import annotations

import csv
import re
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import DataError
from .ingest import PostRecord

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _read_csv_rows(path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        yield from enumerate(csv.reader(fh), start=1)


def load_scores(path) -> dict[str, float]:
    """Read a ``post_id,score`` CSV (header optional) into a dict."""
    scores: dict[str, float] = {}
    for line_no, row in _read_csv_rows(path):
        if not row or not "".join(row).strip():
            continue
        if len(row) < 2:
            raise DataError(f"{path}:{line_no}: expected post_id,score")
        pid, raw = row[0].strip(), row[1].strip()
        try:
            score = float(raw)
        except ValueError:
            if line_no == 1:
                continue  # header
            raise DataError(f"{path}:{line_no}: bad score {raw!r}") from None
        if not 0.0 <= score <= 1.0:
            raise DataError(f"{path}:{line_no}: score {score} outside [0, 1]")
        if pid in scores:
            raise DataError(f"{path}:{line_no}: duplicate post id {pid!r}")
        scores[pid] = score
    return scores


def write_scores(path, scores: dict[str, float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["post_id", "score"])
        for pid in sorted(scores):
            w.writerow([pid, repr(float(scores[pid]))])


class Lexicon:
    """Ordered, de-duplicated list of lowercase hate terms."""

    def __init__(self, terms: Iterable[str], plurals: bool = True):
        self.terms: list[str] = []
        self.plurals = plurals
        seen = set()
        for term in terms:
            norm = " ".join(tokenize(term))
            if norm and norm not in seen:
                seen.add(norm)
                self.terms.append(norm)
        if not self.terms:
            raise ValueError("lexicon has no terms")
        # first token -> list of (token tuple, term)
        self._by_head: dict[str, list[tuple[tuple[str, ...], str]]] = {}
        for term in self.terms:
            toks = tuple(term.split())
            variants = [toks]
            if plurals:
                variants.append(toks[:-1] + (toks[-1] + "s",))
            for v in variants:
                self._by_head.setdefault(v[0], []).append((v, term))

    def __len__(self):
        return len(self.terms)

    def matches(self, body: str | None) -> list[str]:
        if not body:
            return []
        toks = tokenize(body)
        found: list[str] = []
        for i, tok in enumerate(toks):
            for seq, term in self._by_head.get(tok, ()):
                if tuple(toks[i : i + len(seq)]) == seq and term not in found:
                    found.append(term)
        return found


def load_lexicon(path=None, plurals: bool = True) -> Lexicon:
    """One term per line, ``#`` starts a comment. ``None`` loads the bundled placeholder."""
    if path is None:
        text = resources.files("hatediffusion").joinpath("data/placeholder_lexicon.txt").read_text()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read lexicon {path}: {exc}") from exc
    terms = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    try:
        return Lexicon([t for t in terms if t], plurals=plurals)
    except ValueError as exc:
        raise DataError(f"lexicon {path}: {exc}") from exc


def lexicon_match(body: str | None, lexicon: Lexicon) -> tuple[bool, list[str]]:
    found = lexicon.matches(body)
    return bool(found), found


def score_lexicon(posts: Iterable[PostRecord], lexicon: Lexicon, kinds=("original", "reply")) -> dict[str, float]:
    """Hard 0/1 scores for authored posts."""
    return {p.id: 1.0 if lexicon.matches(p.body) else 0.0 for p in posts if p.kind in kinds}
