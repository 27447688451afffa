"""Append-only JSON Lines record of oracle exchanges."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

FORMAT_VERSION = 1


class ReplayMiss(LookupError):
    pass


class TranscriptError(ValueError):
    pass


@dataclass(frozen=True)
class TranscriptEntry:
    context_digest: str
    kind: str
    raw_text: str
    attempts: int = 1


class OracleTranscript:
    """Entries keyed by (context digest, kind); the first recording wins.

    The file starts with a header line naming the mode the answers came from;
    every following line is one entry.
    """

    def __init__(self, path: Optional[Path] = None, mode_recorded: Optional[str] = None):
        self.path = Path(path) if path is not None else None
        self.mode_recorded = mode_recorded
        self.entries: list[TranscriptEntry] = []
        self._index: dict[tuple[str, str], TranscriptEntry] = {}
        self._lock = threading.Lock()
        self._header_written = False

    @classmethod
    def load(cls, path: Path) -> "OracleTranscript":
        t = cls(path)
        p = Path(path)
        if not p.exists():
            return t
        for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TranscriptError(f"{p}:{lineno}: {exc.msg}") from None
            if doc.get("type") == "header":
                t.mode_recorded = doc.get("mode_recorded")
                t._header_written = True
                continue
            try:
                entry = TranscriptEntry(doc["context_digest"], doc["kind"], doc["raw_text"], int(doc.get("attempts", 1)))
            except (KeyError, TypeError, ValueError):
                raise TranscriptError(f"{p}:{lineno}: not a transcript entry") from None
            t._index.setdefault((entry.context_digest, entry.kind), entry)
            t.entries.append(entry)
        return t

    def lookup(self, context_digest: str, kind: str) -> Optional[TranscriptEntry]:
        return self._index.get((context_digest, kind))

    def record(self, context_digest: str, kind: str, raw_text: str, attempts: int = 1,
               mode: Optional[str] = None) -> TranscriptEntry:
        with self._lock:
            existing = self._index.get((context_digest, kind))
            if existing is not None:
                return existing
            if self.mode_recorded is None:
                self.mode_recorded = mode
            entry = TranscriptEntry(context_digest, kind, raw_text, attempts)
            self.entries.append(entry)
            self._index[(context_digest, kind)] = entry
            if self.path is not None:
                self._append(entry)
            return entry

    def replay(self, context_digest: str, kind: str) -> TranscriptEntry:
        entry = self.lookup(context_digest, kind)
        if entry is None:
            raise ReplayMiss(f"no transcript entry for {kind} {context_digest[:12]}")
        return entry

    def _append(self, entry: TranscriptEntry) -> None:
        assert self.path is not None
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            if not self._header_written:
                header = {"type": "header", "version": FORMAT_VERSION, "mode_recorded": self.mode_recorded}
                fh.write(json.dumps(header, sort_keys=True) + "\n")
                self._header_written = True
            doc = {"type": "entry", "context_digest": entry.context_digest, "kind": entry.kind,
                   "raw_text": entry.raw_text, "attempts": entry.attempts}
            fh.write(json.dumps(doc, sort_keys=True) + "\n")
