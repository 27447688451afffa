"""Select the source files that contain a signature recovery call."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .frontend import ParseError, load, locate_sinks
from .frontend.inheritance import CycleError


@dataclass
class ScreenResult:
    matches: list[Path] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def solidity_files(root: Path) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    return sorted(p for p in root.rglob("*.sol") if p.is_file())


def has_sink(text: str, path: str = "") -> bool:
    return bool(locate_sinks(load(text, path)))


def corpus_screen(root: Path) -> ScreenResult:
    """Files whose parsed source has at least one recovery sink.

    Files that cannot be read or parsed are skipped with a note.
    """
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"{root} does not exist")
    out = ScreenResult()
    for p in solidity_files(root):
        try:
            text = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            out.notes.append(f"{p}: unreadable: {exc}")
            continue
        try:
            if has_sink(text, str(p)):
                out.matches.append(p)
        except (ParseError, CycleError) as exc:
            out.notes.append(f"{p}: not parsed: {exc}")
    return out
