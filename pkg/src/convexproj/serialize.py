"""Deterministic JSON and CSV emission.

Floats are written with 17 significant digits so that every double survives
a round trip; non-finite values become ``null``.  Dictionaries keep their
insertion order, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np

SCHEMA = "convexproj/1"


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = "%.17g" % x
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _encode(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, value in enumerate(items):
            if i:
                out.append(", ")
            _encode(value, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out) + "\n"


def with_schema(payload: dict) -> dict:
    return {"schema": SCHEMA, **payload}


def check_schema(data: Any) -> dict:
    """Accept documents without a schema tag, reject other versions."""
    if not isinstance(data, dict):
        raise ValueError("expected a JSON object")
    tag = data.get("schema", SCHEMA)
    if tag != SCHEMA:
        raise ValueError(f"unsupported schema {tag!r}")
    return data


def csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([format_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
