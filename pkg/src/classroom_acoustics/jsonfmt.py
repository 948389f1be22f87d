"""Deterministic JSON text with a fixed float format.

``json.dumps`` always writes floats with ``repr``; model files want 17
significant digits and reports want exactly 6 fractional digits.
"""
from __future__ import annotations

import json
import math

import numpy as np

MODEL_FLOAT = ".17g"
REPORT_FLOAT = ".6f"


def _float(x: float, fmt: str) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    text = format(x, fmt)
    if fmt.endswith("g") and not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def dumps(obj, float_format: str = MODEL_FLOAT, indent: int = 2) -> str:
    """Serialize with sorted keys, fixed float formatting and a trailing newline."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _float(float(o), float_format)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            o = o.tolist()
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in sorted(o.items())]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"
