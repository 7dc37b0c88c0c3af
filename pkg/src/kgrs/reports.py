"""Deterministic JSON/CSV emission.

Floats are written with 17 significant digits, keys keep insertion order and
files are replaced atomically, so identical runs give identical bytes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def _scalar(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return "null"
        text = format(v, ".17g")
        if "e" not in text and "." not in text and "n" not in text:
            text += ".0"
        return text
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(obj, indent=2, _level=0):
    """JSON text with fixed float formatting."""
    pad = " " * (indent * (_level + 1))
    close = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + close + "]"
    if isinstance(obj, (complex, np.complexfloating)):
        return "[" + _scalar(obj.real) + ", " + _scalar(obj.imag) + "]"
    return _scalar(obj)


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload):
    write_atomic(path, dumps(payload) + "\n")


def _fmt(v):
    return format(float(v), ".17g")


def matrix_csv(matrix):
    """Rows ``n,m,re,im`` for a complex matrix."""
    lines = ["n,m,re,im"]
    A = np.asarray(matrix, dtype=complex)
    for n in range(A.shape[0]):
        for m in range(A.shape[1]):
            v = A[n, m]
            lines.append(f"{n},{m},{_fmt(v.real)},{_fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def curves_csv(columns):
    """Column-aligned CSV; ``columns`` maps header -> sequence of floats."""
    names = list(columns)
    length = max(len(columns[c]) for c in names)
    lines = [",".join(["k"] + names)]
    for k in range(length):
        row = [str(k)] + [_fmt(columns[c][k]) if k < len(columns[c]) else "" for c in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
