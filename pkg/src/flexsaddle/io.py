"""Framework JSON schema, result files and trajectory formats."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .framework import Framework, FrameworkError, Pin, PinningScheme

HISTORY_HEADER = ["iter", "energy", "move_norm", "constraint_inf", "kkt_residual"]


class SchemaError(ValueError):
    """Input file does not match the framework schema."""


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise SchemaError(f"{where}: {msg}")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def framework_from_dict(data: Any) -> Framework:
    """Validate a framework document and build the framework.

    Errors name the offending field, e.g. ``vertices[3][1]: expected a
    number``.
    """
    _require(isinstance(data, dict), "$", "expected an object")
    for key in ("dim", "vertices", "edges"):
        _require(key in data, "$", f"missing required field {key!r}")
    known = {"dim", "vertices", "edges", "free_edge", "rest_lengths", "pins", "labels"}
    extra = sorted(set(data) - known)
    _require(not extra, "$", f"unknown fields {extra}")

    dim = data["dim"]
    _require(_is_int(dim) and dim >= 1, "dim", "expected a positive integer")
    verts = data["vertices"]
    _require(isinstance(verts, list) and verts, "vertices", "expected a non-empty list")
    for i, v in enumerate(verts):
        _require(isinstance(v, list) and len(v) == dim, f"vertices[{i}]", f"expected {dim} coordinates")
        for j, c in enumerate(v):
            _require(_is_real(c), f"vertices[{i}][{j}]", "expected a finite number")
    n = len(verts)
    edges = data["edges"]
    _require(isinstance(edges, list) and edges, "edges", "expected a non-empty list")
    for i, e in enumerate(edges):
        _require(isinstance(e, list) and len(e) == 2, f"edges[{i}]", "expected a pair [a, b]")
        for j, k in enumerate(e):
            _require(_is_int(k) and 0 <= k < n, f"edges[{i}][{j}]", f"expected a vertex index in [0, {n})")
    free = data.get("free_edge", 0)
    _require(_is_int(free) and 0 <= free < len(edges), "free_edge", f"expected an edge index in [0, {len(edges)})")
    rest = data.get("rest_lengths")
    if rest is not None:
        _require(isinstance(rest, list) and len(rest) == len(edges), "rest_lengths", f"expected {len(edges)} numbers")
        for i, r in enumerate(rest):
            _require(_is_real(r) and r > 0, f"rest_lengths[{i}]", "expected a positive number")
    pins = []
    for i, p in enumerate(data.get("pins", [])):
        where = f"pins[{i}]"
        _require(isinstance(p, dict), where, "expected an object with vertex, axis, value")
        _require(set(p) <= {"vertex", "axis", "value"}, where, f"unknown fields {sorted(set(p) - {'vertex', 'axis', 'value'})}")
        _require(_is_int(p.get("vertex")) and 0 <= p["vertex"] < n, f"{where}.vertex", "expected a vertex index")
        _require(_is_int(p.get("axis")) and 0 <= p["axis"] < dim, f"{where}.axis", f"expected an axis in [0, {dim})")
        value = p.get("value", verts[p["vertex"]][p["axis"]])
        _require(_is_real(value), f"{where}.value", "expected a finite number")
        pins.append(Pin(p["vertex"], p["axis"], float(value)))
    labels = data.get("labels")
    if labels is not None:
        _require(isinstance(labels, list) and len(labels) == n and all(isinstance(s, str) for s in labels),
                 "labels", f"expected {n} strings")
    try:
        fw = Framework.from_points(
            np.array(verts, dtype=float).reshape(n, dim),
            [tuple(e) for e in edges],
            free,
            rest_lengths=rest,
            pins=None,
        )
        if pins:
            fw = Framework(fw.topology, fw.config, fw.rest_lengths, PinningScheme(tuple(pins)))
    except FrameworkError as exc:
        raise SchemaError(f"$: {exc}") from None
    return fw


def framework_to_dict(fw: Framework, labels: Optional[list] = None) -> dict:
    out = {
        "dim": fw.dim,
        "vertices": [[float(c) for c in p] for p in fw.config.points],
        "edges": [list(e) for e in fw.topology.edges],
        "free_edge": fw.topology.free_edge,
        "rest_lengths": [float(r) for r in fw.rest_lengths],
        "pins": [{"vertex": p.vertex, "axis": p.axis, "value": float(p.value)} for p in fw.pins],
    }
    if labels is not None:
        out["labels"] = list(labels)
    return out


def loads_document(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_document(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from None
    return loads_document(text, str(path))


def load_framework(path) -> tuple:
    """Return ``(framework, labels)`` from a framework JSON file."""
    data = load_document(path)
    return framework_from_dict(data), (data.get("labels") if isinstance(data, dict) else None)


def to_plain(obj):
    """Convert numpy containers/scalars to JSON-serializable builtins."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys; floats in shortest round-trip form)."""
    return json.dumps(to_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_HEADER)
    for row in history:
        w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    return buf.getvalue()


def read_jsonl(path) -> list:
    rows = []
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip():
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{k}: malformed JSON line ({exc.msg})") from None
    return rows
