"""Canonical JSON rendering.

One serialization for everything that touches disk or the wire: keys sorted
by code point, two-space indent, LF line endings, trailing newline, UTF-8,
floats in shortest round-trip form, NaN/infinity refused. Identical values
yield identical bytes.
"""

from __future__ import annotations

import json
import math
from typing import Any


def _check_finite(obj: Any) -> None:
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError("non-finite number in canonical document")
    if isinstance(obj, dict):
        for v in obj.values():
            _check_finite(v)
    elif isinstance(obj, list):
        for v in obj:
            _check_finite(v)


def canon_dumps(obj: Any) -> str:
    """Pretty canonical form used for files: stable and diff-friendly."""
    _check_finite(obj)
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def canon_bytes(obj: Any) -> bytes:
    return canon_dumps(obj).encode("utf-8")


def canon_compact(obj: Any) -> str:
    """Single-line canonical form used for digests and wire payloads."""
    _check_finite(obj)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _reject_constant(name: str):
    raise ValueError(f"non-finite JSON constant {name!r} not admitted")


def loads_strict(text: str | bytes) -> Any:
    """Parse JSON rejecting NaN/Infinity tokens."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return json.loads(text, parse_constant=_reject_constant)
