"""JSON dump of an AstUnit for debugging."""

from __future__ import annotations

import dataclasses
import json
from enum import Enum

from .ast import AstUnit, Node


def to_jsonable(obj):
    if isinstance(obj, Node):
        out = {"node": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj


def dump_unit(unit: AstUnit) -> str:
    doc = {
        "source_path": unit.source_path,
        "pragma": unit.pragma,
        "contracts": to_jsonable(unit.contracts),
        "free_functions": to_jsonable(unit.free_functions),
        "node_index": {
            str(k): [sp.line, sp.col, sp.start, sp.end] for k, sp in sorted(unit.node_index.items())
        },
    }
    return json.dumps(doc, indent=1, sort_keys=False)
