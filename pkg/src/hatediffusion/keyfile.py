"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored, values may be quoted, and
``[section]`` headers are tolerated but flattened away.
"""
from __future__ import annotations

from pathlib import Path

from .errors import UsageError


def read_keyfile(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return parse_keyfile(text, str(path))


def parse_keyfile(text: str, name: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise UsageError(f"{name}:{line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if value[:1] in "\"'" and value[-1:] == value[:1] and len(value) >= 2:
            value = value[1:-1]
        else:
            value = value.split(" #", 1)[0].strip()
        out[key.replace("-", "_")] = value
    return out
