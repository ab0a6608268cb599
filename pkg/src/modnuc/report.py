"""Canonical JSON and CSV output for regression-friendly reports."""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj, indent: int = 2) -> str:
    """Sorted keys, floats with 17 significant digits, non-finite floats as strings."""
    return _encode(obj, indent, 0) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc
    return path


def write_report(report: dict, path) -> Path:
    return _write(path, canonical_json(report))


def spectrum_csv(singular_values) -> str:
    lines = ["k,sigma"]
    lines += [f"{k},{format(float(s), '.17g')}" for k, s in enumerate(singular_values, start=1)]
    return "\n".join(lines) + "\n"


def write_spectrum_csv(singular_values, path) -> Path:
    return _write(path, spectrum_csv(singular_values))


def write_text(text: str, path) -> Path:
    return _write(path, text)


def check(name: str, measured: float, bound: float, relation: str = "<=") -> dict:
    """One asserted inequality ``measured <relation> bound`` with its slack."""
    if relation == "<=":
        ok = measured <= bound
        slack = bound - measured
    elif relation == "<":
        ok = measured < bound
        slack = bound - measured
    elif relation == ">":
        ok = measured > bound
        slack = measured - bound
    else:
        raise ValueError(relation)
    return {"name": name, "measured": measured, "bound": bound, "relation": relation,
            "slack": slack, "pass": bool(ok)}
