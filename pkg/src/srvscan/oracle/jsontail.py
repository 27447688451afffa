"""Pull the final JSON object out of free-form model output."""

from __future__ import annotations

import json
from typing import Any, Optional

_decoder = json.JSONDecoder()


def last_json_object(text: str) -> Optional[Any]:
    """The last top-level, well-formed JSON object in ``text`` (or None)."""
    found: Optional[Any] = None
    i = text.find("{")
    while i != -1:
        try:
            obj, end = _decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            i = text.find("{", i + 1)
            continue
        if isinstance(obj, dict):
            found = obj
        i = text.find("{", end)
    return found
