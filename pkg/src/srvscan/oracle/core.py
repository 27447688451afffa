"""Oracle front door: render, ask (live / replay / heuristic), parse."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from . import heuristic
from .client import ChatClient, MalformedResponse
from .jsontail import last_json_object
from .prompts import OracleKind, context_digest, render, rules_for
from .transcript import OracleTranscript, ReplayMiss

DEFAULT_INPUT_BUDGET = 120_000
SRV_TYPES = ("X-CRA", "X-PRA", "CASR", "SSMI", "SMA")


class OracleMode(Enum):
    LIVE = "live"
    REPLAY = "replay"
    HEURISTIC = "heuristic"


class PromptTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleRequest:
    kind: OracleKind
    rendered_prompt: str
    context_digest: str


@dataclass
class OracleResponse:
    kind: OracleKind
    payload: Any
    attempts: int
    raw_text: str
    dropped: int = 0
    reason: str = ""
    source: str = ""


@dataclass(frozen=True)
class WarningRef:
    """What Prompt_C needs to know about a warning."""

    function: str
    srv_type: str


def _mentions(text: str, name: str) -> bool:
    return re.search(r"(?<![A-Za-z0-9_$])" + re.escape(name) + r"(?![A-Za-z0-9_$])", text) is not None


def _names(value: Any) -> list[str]:
    if not isinstance(value, list):
        raise MalformedResponse("expected a list of names")
    return [v for v in value if isinstance(v, str)]


def parse_payload(kind: OracleKind, raw_text: str, code: str) -> tuple[Any, int, str]:
    """Parse the JSON tail of an answer; names absent from ``code`` are dropped."""
    doc = last_json_object(raw_text)
    if doc is None:
        raise MalformedResponse("no JSON object in oracle answer")
    dropped = 0

    def keep(names: Iterable[str]) -> list[str]:
        nonlocal dropped
        out: list[str] = []
        for n in names:
            if _mentions(code, n):
                if n not in out:
                    out.append(n)
            else:
                dropped += 1
        return out

    if kind is OracleKind.KEY_VARIABLES:
        names = keep(_names(doc.get("key_variables", [])))
        return names, dropped, str(doc.get("reason", ""))
    if kind is OracleKind.SANITIZED_VARIABLES:
        raw = doc.get("sanitized", {})
        if not isinstance(raw, dict):
            raise MalformedResponse("'sanitized' must be an object")
        out: dict[str, list[str]] = {}
        for t, names in raw.items():
            norm = str(t).strip().upper().replace("_", "-")
            norm = {"XCRA": "X-CRA", "XPRA": "X-PRA"}.get(norm, norm)
            if norm not in SRV_TYPES:
                dropped += 1
                continue
            kept = keep(_names(names))
            if kept:
                out[norm] = kept
        return out, dropped, ""
    raw = doc.get("sequences", {})
    if not isinstance(raw, dict):
        raise MalformedResponse("'sequences' must be an object")
    seqs: dict[str, list[list[str]]] = {}
    for fn, value in raw.items():
        if not isinstance(value, list):
            raise MalformedResponse("sequence lists must be arrays")
        if value and all(isinstance(v, str) for v in value):
            value = [value]
        lists = []
        for seq in value:
            names = _names(seq)
            kept = keep(names)
            if kept and len(kept) == len(names):
                lists.append(kept)
        seqs[str(fn)] = lists
    return seqs, dropped, ""


@dataclass
class Oracle:
    mode: OracleMode = OracleMode.HEURISTIC
    transcript: Optional[OracleTranscript] = None
    client: Optional[ChatClient] = None
    budget: int = DEFAULT_INPUT_BUDGET
    replay_fallback: bool = False
    requests: list[OracleRequest] = field(default_factory=list)

    def extract_key_variables(self, code_block: str) -> OracleResponse:
        values = {"code_block": code_block}
        return self._ask(OracleKind.KEY_VARIABLES, values, code_block, lambda: heuristic.key_variables(code_block))

    def identify_sanitized_variables(self, slice_text: str, srv_types: Iterable[str]) -> OracleResponse:
        types = [t for t in SRV_TYPES if t in set(srv_types)]
        rules, methods = rules_for(types)
        values = {
            "srv_types": ", ".join(types),
            "sanitized_variable_identification_rules": rules,
            "sanitization_methods": methods,
            "slice": slice_text,
        }
        return self._ask(OracleKind.SANITIZED_VARIABLES, values, slice_text,
                         lambda: heuristic.sanitized_variables(slice_text, types))

    def propose_function_sequences(self, warnings: Iterable[WarningRef], slice_text: str) -> OracleResponse:
        refs = sorted(set(warnings), key=lambda w: (w.function, w.srv_type))
        if not refs:
            raise ValueError("propose_function_sequences needs at least one warning")
        listing = json.dumps([{"function": w.function, "srv_type": w.srv_type} for w in refs], indent=1)
        values = {"warnings": listing, "slice": slice_text}
        names = sorted({w.function for w in refs})
        return self._ask(OracleKind.FUNCTION_SEQUENCE, values, slice_text + "\n" + listing,
                         lambda: heuristic.function_sequences(names, slice_text))

    def _ask(self, kind: OracleKind, values: dict[str, str], code: str, local: Callable[[], str]) -> OracleResponse:
        prompt = render(kind, values)
        if len(prompt) > self.budget:
            raise PromptTooLarge(f"{kind.value} prompt has {len(prompt)} characters, budget is {self.budget}")
        request = OracleRequest(kind, prompt, context_digest(kind, values))
        self.requests.append(request)
        source = self.mode.value
        if self.mode is OracleMode.REPLAY:
            if self.transcript is None:
                raise ReplayMiss("replay mode needs a transcript")
            try:
                entry = self.transcript.replay(request.context_digest, kind.value)
                raw, attempts = entry.raw_text, entry.attempts
            except ReplayMiss:
                if not self.replay_fallback:
                    raise
                raw, attempts, source = local(), 1, "heuristic"
        elif self.mode is OracleMode.HEURISTIC:
            raw, attempts = local(), 1
        else:
            if self.client is None:
                raise ValueError("live mode needs an endpoint")
            raw, attempts = self.client.complete(prompt, lambda t: last_json_object(t) is not None)
        if self.transcript is not None and self.mode is not OracleMode.REPLAY:
            self.transcript.record(request.context_digest, kind.value, raw, attempts, self.mode.value)
        payload, dropped, reason = parse_payload(kind, raw, code)
        return OracleResponse(kind, payload, attempts, raw, dropped, reason, source)


def transcript_io(transcript: OracleTranscript, op: str, request: OracleRequest,
                  raw_text: Optional[str] = None, code: Optional[str] = None) -> Optional[OracleResponse]:
    """Record (``raw_text`` required) or replay one exchange."""
    if op == "record":
        if raw_text is None:
            raise ValueError("record needs raw_text")
        transcript.record(request.context_digest, request.kind.value, raw_text)
        return None
    if op != "replay":
        raise ValueError(f"unknown transcript op {op!r}")
    entry = transcript.replay(request.context_digest, request.kind.value)
    payload, dropped, reason = parse_payload(request.kind, entry.raw_text, code if code is not None else request.rendered_prompt)
    return OracleResponse(request.kind, payload, entry.attempts, entry.raw_text, dropped, reason, "replay")


def open_transcript(path: Optional[Path]) -> Optional[OracleTranscript]:
    return OracleTranscript.load(path) if path is not None else None
