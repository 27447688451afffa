"""Per-contract analysis: slicing, oracle queries, detectors and path checks."""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .detectors import AnalysisContext, DetectorConfig, detect_all, is_safe_library_contract
from .detectors.common import defs_of
from .frontend import AstUnit, NodeId, ParseError, SinkSite, Span, load, locate_sinks
from .frontend.inheritance import CycleError
from .graph import Ipdg, build_ipdg
from .oracle import MalformedResponse, Oracle, OracleUnavailable, PromptTooLarge, ReplayMiss, WarningRef
from .pathcheck import PathNotFound, SolverError, Status, check_reachability, enumerate_path_constraints
from .pathcheck.smtlib import to_smtlib
from .slicer import BudgetExceeded, function_level_slice, initial_code_block
from .taint import SrvType, Warning, default_sources, propagate

log = logging.getLogger(__name__)

PHASES = ("parse", "slice", "detect", "pathcheck")

UNREACHED_NOTE = "no proposed call sequence reaches the sink; reachability is unconfirmed"
SOLVER_ERROR_NOTE = "the solver failed on the path constraints; reachability is unconfirmed"


@dataclass(frozen=True)
class Location:
    path: str
    line: int
    col: int
    end_line: int
    end_col: int

    @classmethod
    def of(cls, unit: AstUnit, span: Span) -> "Location":
        text = unit.source[span.start:span.end]
        end_line = span.line + text.count("\n")
        if "\n" in text:
            end_col = len(text) - text.rfind("\n")
        else:
            end_col = span.col + len(text)
        return cls(span.file or unit.source_path, span.line, span.col, end_line, end_col)

    def to_dict(self) -> dict:
        return {"path": self.path, "line": self.line, "col": self.col, "end_line": self.end_line, "end_col": self.end_col}

    @classmethod
    def from_dict(cls, d: dict) -> "Location":
        return cls(d["path"], d["line"], d["col"], d["end_line"], d["end_col"])


@dataclass(frozen=True)
class Reachability:
    """What the path check concluded for one finding."""

    status: str
    sequence: tuple[str, ...] = ()
    model: Optional[tuple[tuple[str, str], ...]] = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "sequence": list(self.sequence),
            "model": dict(self.model) if self.model is not None else None,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Reachability":
        model = d.get("model")
        return cls(d["status"], tuple(d.get("sequence", ())),
                   tuple(sorted(model.items())) if model is not None else None, d.get("reason", ""))


@dataclass(frozen=True)
class Finding:
    srv_type: str
    contract: str
    function: str
    sink: Location
    evidence: tuple[Location, ...]
    reachability: Reachability
    confidence: str
    notes: tuple[str, ...] = ()

    @property
    def path(self) -> str:
        return self.sink.path

    def sort_key(self) -> tuple:
        return (self.sink.path, self.sink.line, self.srv_type, self.sink.col, self.function)

    def to_dict(self) -> dict:
        return {
            "srv_type": self.srv_type,
            "contract": self.contract,
            "function": self.function,
            "sink": self.sink.to_dict(),
            "evidence": [e.to_dict() for e in self.evidence],
            "reachability": self.reachability.to_dict(),
            "confidence": self.confidence,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Finding":
        return cls(
            d["srv_type"], d["contract"], d["function"], Location.from_dict(d["sink"]),
            tuple(Location.from_dict(e) for e in d["evidence"]), Reachability.from_dict(d["reachability"]),
            d["confidence"], tuple(d.get("notes", ())),
        )


def canonical(findings: Iterable[Finding]) -> list[Finding]:
    return sorted(findings, key=Finding.sort_key)


@dataclass
class Options:
    detectors: DetectorConfig = field(default_factory=DetectorConfig)
    solver: str = "builtin"
    solver_path: str = "z3"
    solver_timeout_ms: int = 5000
    pathcheck: bool = True
    slice_budget: Optional[int] = None
    dump_dir: Optional[Path] = None


@dataclass
class ContractResult:
    """Everything one source file produced."""

    path: str
    findings: list[Finding] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    errors: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    sinks: int = 0
    suppressed: int = 0
    failed: bool = False


class _Clock:
    def __init__(self, timings: dict[str, float]):
        self.timings = timings

    def phase(self, name: str) -> "_Phase":
        return _Phase(self.timings, name)


class _Phase:
    def __init__(self, timings: dict[str, float], name: str):
        self.timings, self.name = timings, name

    def __enter__(self) -> None:
        self.t0 = time.perf_counter()

    def __exit__(self, *exc: object) -> None:
        self.timings[self.name] = self.timings.get(self.name, 0.0) + time.perf_counter() - self.t0


def analyze_file(path: Path, oracle: Oracle, options: Optional[Options] = None) -> ContractResult:
    result = ContractResult(str(path))
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        result.errors.append(f"{path}: cannot read: {exc}")
        return result
    return analyze_source(text, str(path), oracle, options, result)


def analyze_source(text: str, path: str, oracle: Oracle, options: Optional[Options] = None,
                   result: Optional[ContractResult] = None) -> ContractResult:
    options = options or Options()
    result = result or ContractResult(path)
    clock = _Clock(result.timings)
    with clock.phase("parse"):
        try:
            unit = load(text, path)
            graph = build_ipdg(unit)
        except (ParseError, CycleError) as exc:
            result.errors.append(f"{path}: {exc}")
            return result
    sites = [s for s in locate_sinks(unit)
             if not is_safe_library_contract(unit, s.contract, options.detectors)]
    result.sinks = len(sites)
    for site in sites:
        try:
            _analyze_site(unit, graph, site, oracle, options, result, clock)
        except (BudgetExceeded, PromptTooLarge) as exc:
            result.errors.append(f"{path}: sink in {site.enclosing_function} skipped: {exc}")
        except (ReplayMiss, OracleUnavailable, MalformedResponse) as exc:
            # an unanswered oracle query would silently change the findings
            result.errors.append(f"{path}: oracle failed for {site.enclosing_function}: {exc}")
            result.failed = True
    result.findings = canonical(result.findings)
    return result


def _budget(options: Options) -> dict:
    return {} if options.slice_budget is None else {"budget": options.slice_budget}


def _analyze_site(unit: AstUnit, graph: Ipdg, site: SinkSite, oracle: Oracle, options: Options,
                  result: ContractResult, clock: _Clock) -> None:
    with clock.phase("slice"):
        seed = initial_code_block(graph, unit, site, **_budget(options))
        key_vars = oracle.extract_key_variables(seed.text).payload
        sl = function_level_slice(graph, unit, key_vars, seed, **_budget(options))
        if sl.omitted:
            result.notes.append(f"slice for {site.enclosing_function} omits {', '.join(sl.omitted)} to fit the oracle budget")
    with clock.phase("detect"):
        types = [t.value for t in SrvType if t in options.detectors.enabled]
        answer = oracle.identify_sanitized_variables(sl.text, types).payload
        sanitized = {SrvType.parse(k): frozenset(v) for k, v in answer.items()}
        cuts = {SrvType.SMA: defs_of(graph, sanitized.get(SrvType.SMA, ()), sl.functions)}
        taint = propagate(graph, default_sources(graph), cuts, SrvType.SMA)
        ctx = AnalysisContext(unit, graph, site, sl, taint, sanitized, frozenset(key_vars), options.detectors)
        warnings = detect_all(ctx)
    if not warnings:
        return
    with clock.phase("pathcheck"):
        if options.pathcheck:
            refs = [WarningRef(_short(w.function), w.srv_type.value) for w in warnings]
            proposals = oracle.propose_function_sequences(refs, sl.text).payload
        for w in warnings:
            if options.pathcheck:
                reach = _reachability(unit, graph, site, w, proposals, options)
            else:
                reach = Reachability("Unchecked", reason="path checking disabled")
            if reach is None:
                result.suppressed += 1
                continue
            result.findings.append(_finding(unit, site, w, reach))


def _short(function: str) -> str:
    return function.rsplit(".", 1)[-1]


def _reachability(unit: AstUnit, graph: Ipdg, site: SinkSite, w: Warning,
                  proposals: dict[str, list[list[str]]], options: Options) -> Optional[Reachability]:
    """Verdict summary for ``w``; None means every path is infeasible."""
    short = _short(w.function)
    sequences = proposals.get(short)
    if sequences is None:
        sequences = [[short]]
    if not sequences:
        return Reachability("PathNotFound", reason=UNREACHED_NOTE)
    unsat = 0
    undecided: Optional[Reachability] = None
    for seq in sequences:
        try:
            sets = enumerate_path_constraints(unit, graph, seq, site, w.function)
        except PathNotFound:
            continue
        for k, pcs in enumerate(sets):
            if options.dump_dir is not None:
                _dump(options.dump_dir, unit, w, seq, k, to_smtlib(pcs))
            try:
                verdict = check_reachability(pcs, options.solver, options.solver_timeout_ms, options.solver_path)
            except SolverError as exc:
                undecided = undecided or Reachability("Unknown", tuple(seq), reason=f"{SOLVER_ERROR_NOTE}: {exc}")
                continue
            if verdict.status is Status.SAT:
                model = tuple(sorted((verdict.model or {}).items()))
                return Reachability("SAT", tuple(seq), model)
            if verdict.status is Status.UNSAT:
                unsat += 1
            else:
                reason = verdict.reason or f"solver answered {verdict.status.value}"
                undecided = undecided or Reachability(verdict.status.value, tuple(seq), reason=reason)
    if undecided is not None:
        return undecided
    if unsat:
        return None
    return Reachability("PathNotFound", reason=UNREACHED_NOTE)


_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def _dump(dump_dir: Path, unit: AstUnit, w: Warning, seq: list[str], k: int, text: str) -> None:
    stem = Path(unit.source_path).stem or "input"
    name = f"{stem}.{w.function}.{w.srv_type.value}.{'-'.join(seq)}.{k}.smt2"
    target = Path(dump_dir) / _UNSAFE.sub("_", name)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    except OSError as exc:
        log.warning("cannot write constraint dump %s: %s", target, exc)


def _location(unit: AstUnit, node: NodeId) -> Optional[Location]:
    span = unit.node_index.get(unit.origin(node))
    return Location.of(unit, span) if span is not None else None


def _finding(unit: AstUnit, site: SinkSite, w: Warning, reach: Reachability) -> Finding:
    sink = _location(unit, site.id) or _location(unit, w.sink)
    if sink is None:
        sink = Location(unit.source_path, 0, 0, 0, 0)
    evidence = sorted({loc for n in w.evidence if (loc := _location(unit, n)) is not None},
                      key=lambda e: (e.line, e.col, e.end_line, e.end_col))
    confidence = w.confidence
    notes = list(w.notes)
    if reach.status not in ("SAT", "Unchecked"):
        confidence = "low"
        notes.append(reach.reason or f"reachability {reach.status}")
    contract = w.function.split(".", 1)[0] if "." in w.function else site.contract
    return Finding(w.srv_type.value, contract, w.function, sink, tuple(evidence), reach, confidence, tuple(notes))
