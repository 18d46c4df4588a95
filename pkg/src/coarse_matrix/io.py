"""JSON encoding of spaces, subset arrays, matrices, profiles and reports.

Spaces are written by generator descriptor when they have one and as a full
distance table otherwise.  Infinity is the string ``"inf"``.  Tuple labels
are written as JSON lists and read back as tuples, so
``space_from_json(space_to_json(X)) == X`` holds exactly.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .algebra import IndexSet, SubsetArray, SubsetMatrix
from .decomposition import AugmentedMatrix
from .space import (
    Dim0Certificate,
    FiniteMetricSpace,
    Subset,
    disjoint_union,
    from_graph,
    grid,
    interval,
    product,
)


class FormatError(ValueError):
    """Input JSON does not match the expected layout."""


def _num(x: float):
    x = float(x)
    if math.isinf(x):
        return "inf"
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def _parse_num(x: Any) -> float:
    if isinstance(x, str):
        if x in ("inf", "Infinity", "+inf"):
            return math.inf
        raise FormatError(f"not a number: {x!r}")
    return float(x)


def _label_out(label: Any) -> Any:
    if isinstance(label, tuple):
        return [_label_out(x) for x in label]
    if isinstance(label, (np.integer,)):
        return int(label)
    return label


def _label_in(label: Any) -> Any:
    if isinstance(label, list):
        return tuple(_label_in(x) for x in label)
    return label


def label_key(label: Any) -> str:
    """Stable string key for a label (JSON object keys must be strings)."""
    if isinstance(label, str):
        return label
    return json.dumps(_label_out(label), separators=(",", ":"))


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


def space_to_json(space: FiniteMetricSpace) -> dict:
    desc = dict(space.descriptor or {"kind": "table"})
    kind = desc.get("kind", "table")
    metric: dict = {"kind": kind}
    if kind == "interval":
        metric["n"] = desc["n"]
        if "step" in desc:
            metric["step"] = _num(desc["step"])
    elif kind == "grid":
        metric.update(dims=list(desc["dims"]), norm=desc["norm"])
    elif kind == "graph":
        metric["edges"] = [[u, v, _num(w)] for u, v, w in desc["edges"]]
    elif kind == "disjoint_union":
        metric["parts"] = [space_to_json(p) for p in desc["parts"]]
    elif kind == "product":
        metric.update(norm=desc["norm"], factors=[space_to_json(f) for f in desc["factors"]])
    else:
        metric = {"kind": "table", "table": [[_num(d) for d in row] for row in space.dist]}
    return {"name": space.name, "points": [_label_out(p) for p in space.labels], "metric": metric}


def space_from_json(data: dict) -> FiniteMetricSpace:
    try:
        metric = data["metric"]
        kind = metric["kind"]
        name = data.get("name", "X")
        points = [_label_in(p) for p in data["points"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed space JSON: missing {exc}") from None
    if kind == "interval":
        sp = interval(int(metric["n"]), step=_parse_num(metric.get("step", 1)), name=name)
    elif kind == "grid":
        sp = grid(metric["dims"], metric["norm"], name=name)
    elif kind == "graph":
        sp = from_graph(points, [(u, v, _parse_num(w)) for u, v, w in metric["edges"]], name=name)
    elif kind == "disjoint_union":
        sp = disjoint_union([space_from_json(p) for p in metric["parts"]], name=name)
    elif kind == "product":
        x, y = (space_from_json(f) for f in metric["factors"])
        sp = product(x, y, metric["norm"], name=name)
    elif kind == "table":
        table = [[_parse_num(d) for d in row] for row in metric["table"]]
        sp = FiniteMetricSpace(points, table, name=name, descriptor={"kind": "table"}, validate=True)
    else:
        raise FormatError(f"unknown metric kind {kind!r}")
    if list(sp.labels) != points:
        raise FormatError(f"point list does not match the {kind} generator")
    return sp


# ---------------------------------------------------------------------------
# arrays and matrices
# ---------------------------------------------------------------------------


def subset_to_json(sub: Subset) -> list[int]:
    return [int(i) for i in sub.indices]


def subset_from_json(space: FiniteMetricSpace, data: list) -> Subset:
    return Subset.from_indices(space, data)


def array_to_json(a: SubsetArray) -> dict:
    return {
        "space": a.space.name,
        "index": [_label_out(s) for s in a.index],
        "entries": {label_key(s): [int(i) for i in np.flatnonzero(m)] for s, m in zip(a.index, a.masks)},
    }


def array_from_json(space: FiniteMetricSpace, data: dict) -> SubsetArray:
    index = IndexSet.of(_label_in(s) for s in data["index"])
    masks = np.zeros((len(index), len(space)), dtype=np.bool_)
    for k, s in enumerate(index):
        masks[k, data["entries"][label_key(s)]] = True
    return SubsetArray(space, index, masks)


def matrix_to_json(m: SubsetMatrix) -> dict:
    return {
        "space": m.space.name,
        "rows": [_label_out(s) for s in m.rows],
        "cols": [_label_out(t) for t in m.cols],
        "entries": {
            label_key(s): {label_key(t): [int(i) for i in np.flatnonzero(m.masks[a, b])] for b, t in enumerate(m.cols)}
            for a, s in enumerate(m.rows)
        },
    }


def matrix_from_json(space: FiniteMetricSpace, data: dict) -> SubsetMatrix:
    rows = IndexSet.of(_label_in(s) for s in data["rows"])
    cols = IndexSet.of(_label_in(t) for t in data["cols"])
    masks = np.zeros((len(rows), len(cols), len(space)), dtype=np.bool_)
    for a, s in enumerate(rows):
        row = data["entries"][label_key(s)]
        for b, t in enumerate(cols):
            masks[a, b, row[label_key(t)]] = True
    return SubsetMatrix(space, rows, cols, masks)


def cert_to_json(c: Dim0Certificate) -> dict:
    return {"scale": _num(c.scale), "bound": _num(c.bound)}


def cert_from_json(data: dict) -> Dim0Certificate:
    return Dim0Certificate(_parse_num(data["scale"]), _parse_num(data["bound"]))


def augmented_to_json(aug: AugmentedMatrix) -> dict:
    return {
        "scale": _num(aug.scale),
        "matrix": matrix_to_json(aug.matrix),
        "certs": {f"{label_key(s)}:{label_key(t)}": cert_to_json(c)
                  for (s, t), c in sorted(aug.certs.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1])))},
    }


def augmented_from_json(space: FiniteMetricSpace, data: dict) -> AugmentedMatrix:
    matrix = matrix_from_json(space, data["matrix"])
    certs = {}
    for s in matrix.rows:
        for t in matrix.cols:
            key = f"{label_key(s)}:{label_key(t)}"
            if key in data["certs"]:
                certs[(s, t)] = cert_from_json(data["certs"][key])
    return AugmentedMatrix(matrix, _parse_num(data["scale"]), certs)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def dumps(doc: Any) -> str:
    """Deterministic JSON text: fixed key order as built, two-space indent."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        print(text, end="")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
