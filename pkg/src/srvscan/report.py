"""Text, JSON and SARIF renderings of a scan."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import PurePath
from typing import Iterable, Optional

from . import __version__
from .pipeline import PHASES, ContractResult, Finding, canonical
from .taint import SrvType

JSON_SCHEMA_VERSION = 1
SARIF_SCHEMA = "https://json.schemastore.org/sarif-2.1.0.json"
TOOL_NAME = "srvscan"

RULES = {
    SrvType.XCRA: ("CrossChainReplay", "Signature can be replayed on another chain",
                   "The signed message does not commit to the chain id, so a signature valid on one chain is valid on another."),
    SrvType.XPRA: ("CrossProjectReplay", "Signature can be replayed against another contract",
                   "The signed message does not commit to the verifying contract, so a signature for one deployment is accepted by another."),
    SrvType.CASR: ("ContractAccountReplay", "Signature can be replayed across contract accounts",
                   "The signed message does not commit to the account it authorizes, so the same owner's signature works for each of their accounts."),
    SrvType.SSMI: ("SignatureStateManagement", "Used signatures are not tracked",
                   "No nonce or used-signature record is both checked and updated, so a signature can be submitted again."),
    SrvType.SMA: ("SignatureMalleability", "Malleable signature accepted",
                   "The recovery accepts non-canonical v or s values, so a second valid signature can be derived from an observed one."),
}

_LEVEL = {"high": "error", "medium": "warning", "low": "note"}


def rule_id(srv_type: str) -> str:
    return f"SRV-{srv_type}"


@dataclass
class ScanReport:
    results: list[ContractResult] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def findings(self) -> list[Finding]:
        return canonical(f for r in self.results for f in r.findings)

    @property
    def failed(self) -> bool:
        return bool(self.errors) or any(r.failed for r in self.results)

    def diagnostics(self) -> list[str]:
        return list(self.errors) + [e for r in sorted(self.results, key=lambda r: r.path) for e in r.errors]


def emit_report(report: ScanReport, fmt: str, timings: bool = False) -> str:
    if fmt == "text":
        return render_text(report)
    if fmt == "json":
        return render_json(report, timings)
    if fmt == "sarif":
        return render_sarif(report.findings)
    raise ValueError(f"unknown report format {fmt!r}")


# ---------------------------------------------------------------- text


def render_text(report: ScanReport) -> str:
    findings = report.findings
    lines: list[str] = []
    if findings:
        rows = [("LOCATION", "TYPE", "FUNCTION", "CONF", "REACH")]
        for f in findings:
            rows.append((f"{f.sink.path}:{f.sink.line}:{f.sink.col}", f.srv_type, f.function,
                         f.confidence, f.reachability.status))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]) - 1)]
        for r in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)) + "  " + r[-1])
        lines.append("")
        for f in findings:
            lines.append(f"{f.sink.path}:{f.sink.line} {f.srv_type} in {f.function}")
            if f.reachability.sequence:
                lines.append(f"  sequence: {' -> '.join(f.reachability.sequence)}")
            if f.reachability.model:
                lines.append("  model: " + ", ".join(f"{k}={v}" for k, v in f.reachability.model))
            for n in f.notes:
                lines.append(f"  note: {n}")
            if f.evidence:
                lines.append("  evidence lines: " + ", ".join(str(n) for n in sorted({e.line for e in f.evidence})))
        lines.append("")
    else:
        lines.append("no findings")
        lines.append("")
    lines.append("timing (seconds):")
    ordered = sorted(report.results, key=lambda r: r.path)
    width = max([len("file")] + [len(r.path) for r in ordered])
    lines.append("  " + "file".ljust(width) + "".join(p.rjust(11) for p in PHASES))
    for r in ordered:
        lines.append("  " + r.path.ljust(width) + "".join(f"{r.timings.get(p, 0.0):11.3f}" for p in PHASES))
    files = len(report.results)
    lines.append(f"{len(findings)} finding(s) in {files} file(s)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- json


def to_json_doc(report: ScanReport, timings: bool = False) -> dict:
    findings = report.findings
    by_type = {t.value: 0 for t in SrvType}
    for f in findings:
        by_type[f.srv_type] = by_type.get(f.srv_type, 0) + 1
    files = []
    for r in sorted(report.results, key=lambda r: r.path):
        entry: dict = {"path": r.path, "sinks": r.sinks, "findings": len(r.findings),
                       "suppressed": r.suppressed, "errors": list(r.errors), "notes": list(r.notes)}
        if timings:
            entry["timings"] = {p: round(r.timings.get(p, 0.0), 6) for p in PHASES}
        files.append(entry)
    return {
        "schema_version": JSON_SCHEMA_VERSION,
        "tool": {"name": TOOL_NAME, "version": __version__},
        "summary": {"files": len(report.results), "findings": len(findings), "by_type": by_type},
        "files": files,
        "errors": list(report.errors),
        "findings": [f.to_dict() for f in findings],
    }


def render_json(report: ScanReport, timings: bool = False) -> str:
    return json.dumps(to_json_doc(report, timings), indent=2, sort_keys=True) + "\n"


def findings_from_json(text: str) -> list[Finding]:
    doc = json.loads(text)
    return [Finding.from_dict(d) for d in doc["findings"]]


# ---------------------------------------------------------------- sarif


def _uri(path: str) -> str:
    return PurePath(path).as_posix()


def _region(loc) -> dict:
    return {"startLine": max(loc.line, 1), "startColumn": max(loc.col, 1),
            "endLine": max(loc.end_line, 1), "endColumn": max(loc.end_col, 1)}


def _physical(loc) -> dict:
    return {"physicalLocation": {"artifactLocation": {"uri": _uri(loc.path)}, "region": _region(loc)}}


def sarif_rules() -> list[dict]:
    out = []
    for t in SrvType:
        name, short, full = RULES[t]
        out.append({
            "id": rule_id(t.value),
            "name": name,
            "shortDescription": {"text": short},
            "fullDescription": {"text": full},
            "defaultConfiguration": {"level": "error"},
            "properties": {"srv_type": t.value},
        })
    return out


def to_sarif_doc(findings: Iterable[Finding]) -> dict:
    order = [t.value for t in SrvType]
    results = []
    for f in canonical(findings):
        name, short, _ = RULES[SrvType.parse(f.srv_type)]
        message = f"{short} in {f.function}"
        if f.notes:
            message += ": " + "; ".join(f.notes)
        result: dict = {
            "ruleId": rule_id(f.srv_type),
            "ruleIndex": order.index(f.srv_type),
            "level": _LEVEL.get(f.confidence, "warning"),
            "message": {"text": message},
            "locations": [_physical(f.sink)],
            "properties": {
                "contract": f.contract,
                "function": f.function,
                "confidence": f.confidence,
                "reachability": f.reachability.to_dict(),
                "notes": list(f.notes),
            },
        }
        if f.evidence:
            result["relatedLocations"] = [
                {"id": i, **_physical(e), "message": {"text": "evidence"}} for i, e in enumerate(f.evidence)
            ]
        results.append(result)
    return {
        "$schema": SARIF_SCHEMA,
        "version": "2.1.0",
        "runs": [{
            "tool": {"driver": {"name": TOOL_NAME, "version": __version__, "rules": sarif_rules()}},
            "columnKind": "unicodeCodePoints",
            "results": results,
        }],
    }


def render_sarif(findings: Iterable[Finding], indent: Optional[int] = 2) -> str:
    return json.dumps(to_sarif_doc(findings), indent=indent, sort_keys=True) + "\n"
