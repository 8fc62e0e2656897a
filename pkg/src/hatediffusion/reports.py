"""Writers for the JSON and CSV report files."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diffusion import BeliefVector
from .errors import DataError


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_beliefs(path, beliefs: BeliefVector) -> Path:
    return write_csv(
        path,
        ["user_id", "belief", "is_seed"],
        ((u, float(b), int(s)) for u, b, s in zip(beliefs.ids, beliefs.values, beliefs.is_seed)),
    )


def read_beliefs(path) -> tuple[dict[str, float], set[str]]:
    beliefs, seeds = {}, set()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for row in csv.DictReader(fh):
            try:
                b = float(row["belief"])
                if not 0.0 <= b <= 1.0:
                    raise ValueError(f"belief {b} outside [0, 1]")
                beliefs[row["user_id"]] = b
                if row.get("is_seed", "0").strip() in ("1", "true", "True"):
                    seeds.add(row["user_id"])
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}: bad row {row}: {exc}") from exc
    return beliefs, seeds


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
