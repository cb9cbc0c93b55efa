"""JSON/CSV serialization shared by scenarios and the CLI."""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA = 1


def jsonable(obj):
    """Recursively convert numpy/complex/dataclass values to JSON types."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def envelope(kind: str, payload: dict, config: dict) -> dict:
    return {
        "schema": SCHEMA,
        "tool": "foodchain",
        "version": __version__,
        "kind": kind,
        "config": jsonable(config),
        "result": jsonable(payload),
    }


def dumps(doc) -> str:
    # repr-based float formatting round-trips every double exactly
    return json.dumps(jsonable(doc), indent=2, sort_keys=False)


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc) + "\n")
    return path
