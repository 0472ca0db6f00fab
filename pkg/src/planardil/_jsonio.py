"""Deterministic JSON encoding: sorted keys, repr floats, complex as ``[re, im]``."""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass

import numpy as np


def cmatrix(a) -> list:
    """Nested lists of ``[re, im]`` pairs for any complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [cmatrix(x) for x in arr]


def to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if hasattr(obj, "to_json"):
        return to_plain(obj.to_json())
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_plain(asdict(obj))
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return cmatrix(obj)
        return to_plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not np.isfinite(f):
            return repr(f)
        return f
    return obj


def dumps(obj) -> str:
    return json.dumps(to_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_complex(x) -> complex:
    """Accept ``[re, im]``, a bare number, or a Python complex literal string."""
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError("complex values are [re, im] pairs")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def parse_cvector(items) -> np.ndarray:
    """A list whose every item is one complex number."""
    return np.array([parse_complex(x) for x in items], dtype=complex)


def parse_cmatrix(rows) -> np.ndarray:
    """Row-major nested lists of complex numbers."""
    out = [parse_cvector(r) for r in rows]
    if len({len(r) for r in out}) > 1:
        raise ValueError("matrix rows must have equal length")
    return np.array(out, dtype=complex)


def parse_targets(items) -> np.ndarray:
    """Scalar targets, or a list of square matrices (items that are lists of rows)."""
    if items and all(isinstance(x, list) and x and isinstance(x[0], list) for x in items):
        return np.array([parse_cmatrix(x) for x in items])
    return parse_cvector(items)
