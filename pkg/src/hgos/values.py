"""Attribute values: the tagged union every node/link attribute carries.

In memory a value is a plain Python object: str (text), float (number),
bool (flag), list, dict (string-keyed map) or Uri. On the wire and on disk
every value is a tagged object {"kind": k, "value": v} so that uri and text
stay distinct and maps can never be mistaken for tags.
"""

from __future__ import annotations

import math
from typing import Any

from .errors import MalformedDocument

KINDS = ("text", "number", "flag", "list", "map", "uri")


class Uri(str):
    """A reference string, distinct from plain text."""

    __slots__ = ()

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Uri({str.__repr__(self)})"


def kind_of(value: Any) -> str:
    """Kind tag for an in-memory attribute value."""
    if isinstance(value, Uri):
        return "uri"
    if isinstance(value, bool):
        return "flag"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "text"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "map"
    raise MalformedDocument(f"unsupported attribute value type: {type(value).__name__}")


def normalize_value(value: Any) -> Any:
    """Coerce a Python value into the model's shape; reject what cannot be held.

    ints become floats, tuples become lists; NaN/inf are refused at the model
    layer so canonical serialization stays total.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        value = float(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise MalformedDocument("number attribute must be finite")
        return value
    if isinstance(value, Uri):
        return value
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        value = list(value)
    if isinstance(value, list):
        return [normalize_value(v) for v in value]
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise MalformedDocument("map keys must be strings")
            out[k] = normalize_value(v)
        return out
    raise MalformedDocument(f"unsupported attribute value type: {type(value).__name__}")


def to_tagged(value: Any) -> dict:
    """Encode an in-memory value as its tagged JSON form."""
    kind = kind_of(value)
    if kind == "list":
        return {"kind": "list", "value": [to_tagged(v) for v in value]}
    if kind == "map":
        return {"kind": "map", "value": {k: to_tagged(v) for k, v in value.items()}}
    if kind == "uri":
        return {"kind": "uri", "value": str(value)}
    return {"kind": kind, "value": value}


def from_tagged(obj: Any) -> Any:
    """Decode the tagged JSON form back into an in-memory value."""
    if not isinstance(obj, dict) or set(obj.keys()) != {"kind", "value"}:
        raise MalformedDocument("attribute value must be a {kind, value} object")
    kind, value = obj["kind"], obj["value"]
    if kind == "text":
        if not isinstance(value, str):
            raise MalformedDocument("text value must be a string")
        return value
    if kind == "uri":
        if not isinstance(value, str):
            raise MalformedDocument("uri value must be a string")
        return Uri(value)
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MalformedDocument("number value must be numeric")
        return normalize_value(value)
    if kind == "flag":
        if not isinstance(value, bool):
            raise MalformedDocument("flag value must be a boolean")
        return value
    if kind == "list":
        if not isinstance(value, list):
            raise MalformedDocument("list value must be an array")
        return [from_tagged(v) for v in value]
    if kind == "map":
        if not isinstance(value, dict):
            raise MalformedDocument("map value must be an object")
        return {k: from_tagged(v) for k, v in value.items()}
    raise MalformedDocument(f"unknown value kind {kind!r}")


def value_to_text(value: Any) -> str:
    """Render a value as template/search-facing text."""
    kind = kind_of(value)
    if kind in ("text", "uri"):
        return str(value)
    if kind == "number":
        return repr(value)
    if kind == "flag":
        return "true" if value else "false"
    # containers render as compact canonical JSON of the tagged form
    from .canon import canon_compact

    return canon_compact(to_tagged(value))


def values_equal(a: Any, b: Any) -> bool:
    """Structural equality that keeps uri and text apart."""
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        return False
    if ka == "list":
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if ka == "map":
        return a.keys() == b.keys() and all(values_equal(a[k], b[k]) for k in a)
    return a == b
