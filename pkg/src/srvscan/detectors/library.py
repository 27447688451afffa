"""Is a recovery library trusted to reject malleable signatures?"""

from __future__ import annotations

import re
from typing import Optional

from ..frontend.ast import AstUnit
from .config import SAFE_LIBRARY_MIN_VERSION, DetectorConfig

_BANNER = re.compile(r"OpenZeppelin Contracts(?:[^\n]*?)\bv(\d+)\.(\d+)\.(\d+)")
_UPDATED = re.compile(r"last updated v(\d+)\.(\d+)\.(\d+)")
_IMPORT = re.compile(r"@openzeppelin/contracts(?:-upgradeable)?@(\d+)\.(\d+)\.(\d+)")


def library_version(unit: AstUnit, library: str) -> Optional[tuple[int, int, int]]:
    """Version declared for ``library`` in this unit, when one is visible.

    An in-unit copy is dated by the release banner in the file's comments; an
    imported one only by a pinned version in its import path.
    """
    if unit.contract(library) is not None:
        found = []
        for text in unit.comments:
            for rx in (_BANNER, _UPDATED):
                found += [tuple(int(x) for x in m.groups()) for m in rx.finditer(text)]
        return max(found) if found else None
    for imp in unit.imports:
        if library.lower() in imp.path.lower():
            m = _IMPORT.search(imp.path)
            if m:
                return tuple(int(x) for x in m.groups())
    return None


def exempt_library(unit: AstUnit, library: str, cfg: DetectorConfig) -> tuple[bool, str]:
    """(exempt, note) for a library-recover sink."""
    if library not in cfg.safe_library_names:
        return False, f"recovery library {library or '?'} is not on the safe list"
    version = library_version(unit, library)
    if version is not None and version < SAFE_LIBRARY_MIN_VERSION:
        shown = ".".join(map(str, version))
        return False, f"{library} v{shown} predates 4.7.3 and accepts malleable signatures"
    return True, ""


def is_safe_library_contract(unit: AstUnit, contract: str, cfg: DetectorConfig) -> bool:
    c = unit.contract(contract)
    return c is not None and c.kind == "library" and contract in cfg.safe_library_names
