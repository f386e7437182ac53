"""Problem files and result documents (JSON).

Problem file::

    {
      "board": {"width": 100.0, "height": 80.0},
      "grid_resolution": 100,
      "nets": [{"label": "VCC", "pins": [[12.5, 3.0], [40.0, 7.25]]}, ...]
    }

Pins are physical coordinates inside the board.  Result documents carry a
``schema_version``, the problem echoed back, every seed and config value,
metrics, and wall-clock numbers under ``timings`` only.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np

from .model import DEFAULT_GRID_RESOLUTION, Problem, ProblemError, normalize_problem

SCHEMA_VERSION = "1.0"


class ProblemFormatError(ValueError):
    """Malformed problem file; ``where`` names the offending line or field."""

    def __init__(self, message: str, where: str = "", source: str = ""):
        self.where = where
        self.source = source
        prefix = ": ".join(p for p in (source, where) if p)
        super().__init__(f"{prefix}: {message}" if prefix else message)


def _number(value, where, source) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFormatError(f"expected a number, got {value!r}", where, source)
    if not math.isfinite(value):
        raise ProblemFormatError("coordinate is not finite", where, source)
    return float(value)


def problem_from_dict(doc: Any, source: str = "") -> Problem:
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level must be an object", "", source)
    board = doc.get("board")
    if not isinstance(board, dict) or "width" not in board or "height" not in board:
        raise ProblemFormatError("missing board.width / board.height", "board", source)
    width = _number(board["width"], "board.width", source)
    height = _number(board["height"], "board.height", source)
    if width <= 0 or height <= 0:
        raise ProblemFormatError("board extents must be positive", "board", source)
    res = doc.get("grid_resolution", DEFAULT_GRID_RESOLUTION)
    if isinstance(res, bool) or not isinstance(res, int):
        raise ProblemFormatError("must be an integer", "grid_resolution", source)
    nets = doc.get("nets")
    if not isinstance(nets, list) or not nets:
        raise ProblemFormatError("need a nonempty list of nets", "nets", source)

    labels: List[str] = []
    pins: List[List[tuple]] = []
    for i, net in enumerate(nets):
        where = f"nets[{i}]"
        if not isinstance(net, dict):
            raise ProblemFormatError("net must be an object", where, source)
        label = net.get("label", f"N{i + 1}")
        if not isinstance(label, str):
            raise ProblemFormatError("label must be a string", f"{where}.label", source)
        raw = net.get("pins")
        if not isinstance(raw, list) or not raw:
            raise ProblemFormatError("need a nonempty list of pins", f"{where}.pins", source)
        pts = []
        for j, p in enumerate(raw):
            pw = f"{where}.pins[{j}]"
            if not isinstance(p, (list, tuple)) or len(p) != 2:
                raise ProblemFormatError("pin must be [x, y]", pw, source)
            pts.append((_number(p[0], pw + "[0]", source), _number(p[1], pw + "[1]", source)))
        labels.append(label)
        pins.append(pts)
    try:
        return normalize_problem(pins, (width, height), labels, res)
    except ProblemError as exc:
        raise ProblemFormatError(str(exc), "nets", source) from exc


def problem_to_dict(problem: Problem) -> Dict[str, Any]:
    return {
        "board": {"width": problem.board_width, "height": problem.board_height},
        "grid_resolution": problem.grid_resolution,
        "nets": [
            {"label": n.label, "pins": [[x, y] for x, y in n.raw_pins]}
            for n in problem.nets
        ],
    }


def loads_problem(text: str, source: str = "") -> Problem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}", source) from exc
    return problem_from_dict(doc, source)


def dumps_problem(problem: Problem) -> str:
    # repr-exact floats, so parse(serialize(p)) == p
    return json.dumps(problem_to_dict(problem), indent=2) + "\n"


def load_problem(path) -> Problem:
    path = Path(path)
    return loads_problem(path.read_text(), str(path))


def save_problem(problem: Problem, path) -> None:
    Path(path).write_text(dumps_problem(problem))


# result documents ---------------------------------------------------------

_labels_rle = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                         "minItems": 2, "maxItems": 2}},
}

_problem_schema = {
    "type": "object",
    "required": ["board", "grid_resolution", "nets"],
    "properties": {
        "board": {"type": "object", "required": ["width", "height"]},
        "grid_resolution": {"type": "integer", "minimum": 16},
        "nets": {"type": "array", "minItems": 1},
    },
}

_partition_schema = {
    "type": "object",
    "required": ["resolution", "labels", "island_counts", "ei", "feasible"],
    "properties": {
        "resolution": {"type": "integer"},
        "labels": _labels_rle,
        "island_counts": {"type": "object", "additionalProperties": {"type": "integer"}},
        "ei": {"type": ["integer", "null"]},
        "feasible": {"type": "boolean"},
    },
}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", "problem", "config", "metrics", "timings"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["gomlp", "mlp-only", "astar", "multilayer", "problems", "benchmark"]},
        "problem": {"oneOf": [_problem_schema, {"type": "null"}]},
        "config": {"type": "object"},
        "metrics": {"type": "object"},
        "partition": _partition_schema,
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


def validate_result(doc: Dict[str, Any]) -> None:
    jsonschema.validate(doc, RESULT_SCHEMA)


def encode_labels(labels: np.ndarray) -> List[List[List[int]]]:
    """Run-length encode each row as ``[[label, run], ...]``."""
    out = []
    for row in np.asarray(labels):
        runs = []
        start = 0
        change = np.flatnonzero(np.diff(row)) + 1
        for end in [*change.tolist(), len(row)]:
            runs.append([int(row[start]), end - start])
            start = end
        out.append(runs)
    return out


def decode_labels(rows) -> np.ndarray:
    return np.array(
        [np.repeat([v for v, _ in r], [n for _, n in r]) for r in rows], dtype=np.int64
    )


def partition_doc(partition, ei, feasible) -> Dict[str, Any]:
    return {
        "resolution": partition.resolution,
        "labels": encode_labels(partition.labels),
        "island_counts": {str(k): v for k, v in partition.island_counts().items()},
        "ei": ei,
        "feasible": bool(feasible),
    }


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def result_document(
    kind: str,
    problem: Optional[Problem],
    config: Dict[str, Any],
    metrics: Dict[str, Any],
    timings: Dict[str, float],
    **extra,
) -> Dict[str, Any]:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "problem": problem_to_dict(problem) if problem is not None else None,
        "config": _plain(config),
        "metrics": _plain(metrics),
        **{k: _plain(v) for k, v in extra.items()},
        "timings": {k: float(v) for k, v in timings.items()},
    }
    validate_result(doc)
    return doc


def dumps_result(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_result(doc: Dict[str, Any], path) -> None:
    Path(path).write_text(dumps_result(doc))


def load_result(path) -> Dict[str, Any]:
    doc = json.loads(Path(path).read_text())
    validate_result(doc)
    return doc


def mask_timings(doc: Dict[str, Any]) -> Dict[str, Any]:
    """Copy with every ``timings`` mapping blanked, at any depth."""
    if isinstance(doc, dict):
        return {k: ({} if k == "timings" else mask_timings(v)) for k, v in doc.items()}
    if isinstance(doc, list):
        return [mask_timings(v) for v in doc]
    return doc
