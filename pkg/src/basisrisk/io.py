"""Canonical table and JSON emission.

Output formatting is deliberately rigid -- sorted JSON keys, two-space
indent, shortest-round-trip float repr, trailing newline -- so that re-running
a command with the same seed produces byte-identical files and parsing an
emitted JSON document and re-dumping it reproduces the original bytes.
NaN values are emitted as null.
"""

from __future__ import annotations

import json
import math
import sys


def _clean(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(header: list[str], rows: list[dict]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(row.get(h)) for h in header))
    return "\n".join(lines) + "\n"


def emit(text: str, out: str | None):
    """Write to a path, or stdout when out is None or '-'."""
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
