"""Deterministic JSON/CSV writers (floats at 17 significant digits)."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        # JSON has no inf/nan literal; strings keep the file loadable
        return json.dumps(repr(float(x)))
    return format(float(x), ".17g")


def _encode(obj, out: list[str], indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out, indent, level)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for n, (k, v) in enumerate(obj.items()):
            if n:
                out.append(",")
            out.append(pad + json.dumps(str(k)) + ": ")
            _encode(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        # numeric rows stay on one line
        flat = all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj)
        out.append("[")
        for n, v in enumerate(obj):
            if n:
                out.append(", " if flat else ",")
            if not flat:
                out.append(pad)
            _encode(v, out, indent, level + 1)
        out.append("]" if flat else end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    out: list[str] = []
    _encode(obj, out, indent, 0)
    return "".join(out) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def to_float(x) -> float:
    """Inverse of the non-finite string encoding used by ``dumps``."""
    if isinstance(x, str):
        return float(x)
    return float(x)


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(v).strip('"') if isinstance(v, (float, np.floating)) else
                    (int(v) if isinstance(v, (bool, np.bool_)) else v) for v in row])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
