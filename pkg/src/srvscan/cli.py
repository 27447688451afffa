"""Command-line entry point: ``srvscan scan|screen|fetch``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import FORMATS, ConfigError, RunConfig, resolve
from .explorer import FetchError, corpus_fetch
from .oracle import ChatClient, Oracle, OracleMode, OracleTranscript
from .oracle.transcript import TranscriptError
from .pathcheck import BACKENDS
from .pipeline import ContractResult, Options, analyze_file
from .report import ScanReport, emit_report
from .screening import corpus_screen, solidity_files

EXIT_CLEAN, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2

log = logging.getLogger("srvscan")


def _scan_parser(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("scan", help="analyse Solidity sources")
    p.add_argument("paths", nargs="*", type=Path, help="files or directories (same as --input)")
    p.add_argument("--input", action="append", type=Path, default=[], help="file or directory; repeatable")
    p.add_argument("--config", type=Path, help="YAML run configuration; flags override it")
    p.add_argument("--detectors", help="comma-separated subset of X-CRA,X-PRA,CASR,SSMI,SMA")
    p.add_argument("--oracle", choices=[m.value for m in OracleMode])
    p.add_argument("--oracle-endpoint")
    p.add_argument("--oracle-model")
    p.add_argument("--oracle-budget", type=int)
    p.add_argument("--oracle-rate", type=float, help="live oracle requests per second")
    p.add_argument("--transcript", type=Path, help="JSON Lines transcript to record to or replay from")
    p.add_argument("--replay-fallback", action="store_true", default=None,
                   help="answer replay misses heuristically instead of failing")
    p.add_argument("--solver", choices=BACKENDS)
    p.add_argument("--solver-path")
    p.add_argument("--solver-timeout-ms", type=int)
    p.add_argument("--no-pathcheck", dest="pathcheck", action="store_false", default=None)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--output", "-o", type=Path, help="write the report here instead of stdout")
    p.add_argument("--jobs", type=int)
    p.add_argument("--debug-dumps", type=Path, metavar="DIR", help="write SMT-LIB constraint dumps to DIR")
    p.add_argument("--json-timings", action="store_true", default=None,
                   help="include per-phase timings in JSON reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srvscan", description="Signature replay vulnerability scanner")
    parser.add_argument("--version", action="version", version=f"srvscan {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    _scan_parser(sub)
    s = sub.add_parser("screen", help="list files that contain a signature recovery call")
    s.add_argument("dir", type=Path)
    s.add_argument("--format", choices=("text", "json"), default="text")
    f = sub.add_parser("fetch", help="download verified sources into a cache")
    f.add_argument("addresses", nargs="*")
    f.add_argument("--addresses-file", type=Path)
    f.add_argument("--cache-dir", type=Path, required=True)
    f.add_argument("--chain", default="ethereum")
    f.add_argument("--rate", type=float, default=5.0, help="requests per second")
    return parser


def _flags(ns: argparse.Namespace) -> dict:
    inputs = list(ns.paths) + list(ns.input)
    return {
        "inputs": inputs or None,
        "detectors": ns.detectors,
        "oracle": ns.oracle,
        "oracle_endpoint": ns.oracle_endpoint,
        "oracle_model": ns.oracle_model,
        "oracle_budget": ns.oracle_budget,
        "oracle_rate": ns.oracle_rate,
        "transcript": ns.transcript,
        "replay_fallback": ns.replay_fallback,
        "solver": ns.solver,
        "solver_path": ns.solver_path,
        "solver_timeout_ms": ns.solver_timeout_ms,
        "pathcheck": ns.pathcheck,
        "format": ns.format,
        "output": ns.output,
        "jobs": ns.jobs,
        "debug_dumps": ns.debug_dumps,
        "json_timings": ns.json_timings,
    }


def make_oracle(cfg: RunConfig) -> Oracle:
    if cfg.oracle is OracleMode.REPLAY:
        assert cfg.transcript is not None
        transcript = OracleTranscript.load(cfg.transcript)
        return Oracle(cfg.oracle, transcript, budget=cfg.oracle_budget, replay_fallback=cfg.replay_fallback)
    transcript = OracleTranscript(cfg.transcript) if cfg.transcript is not None else None
    if transcript is not None and cfg.transcript.exists() and cfg.transcript.stat().st_size:
        transcript = OracleTranscript.load(cfg.transcript)
    client = None
    if cfg.oracle is OracleMode.LIVE:
        assert cfg.oracle_endpoint is not None
        client = ChatClient(cfg.oracle_endpoint, cfg.oracle_model, cfg.oracle_key, rate_limit=cfg.oracle_rate)
    return Oracle(cfg.oracle, transcript, client, cfg.oracle_budget)


def expand_inputs(inputs: Sequence[Path]) -> list[Path]:
    seen: dict[Path, None] = {}
    for p in inputs:
        for f in solidity_files(p):
            seen.setdefault(f, None)
    return sorted(seen)


def run_scan(cfg: RunConfig, oracle: Optional[Oracle] = None) -> ScanReport:
    oracle = oracle or make_oracle(cfg)
    options = Options(cfg.detector_config(), cfg.solver, cfg.solver_path, cfg.solver_timeout_ms,
                      cfg.pathcheck, dump_dir=cfg.debug_dumps)
    files = expand_inputs(cfg.inputs)
    report = ScanReport()
    if not files:
        report.errors.append("no Solidity files under the given inputs")
        return report

    def one(path: Path) -> ContractResult:
        return analyze_file(path, oracle, options)

    if cfg.jobs > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(one, files))
    else:
        results = [one(p) for p in files]
    report.results = results
    return report


def exit_code(report: ScanReport) -> int:
    if report.failed:
        return EXIT_ERROR
    return EXIT_FINDINGS if report.findings else EXIT_CLEAN


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")


def cmd_scan(ns: argparse.Namespace) -> int:
    try:
        cfg = resolve(ns.config, _flags(ns))
        report = run_scan(cfg)
    except ConfigError as exc:
        print(f"srvscan: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (TranscriptError, OSError) as exc:
        print(f"srvscan: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for line in report.diagnostics():
        print(f"srvscan: {line}", file=sys.stderr)
    try:
        _write(emit_report(report, cfg.format, cfg.json_timings), cfg.output)
    except OSError as exc:
        print(f"srvscan: cannot write report: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return exit_code(report)


def cmd_screen(ns: argparse.Namespace) -> int:
    try:
        result = corpus_screen(ns.dir)
    except OSError as exc:
        print(f"srvscan: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for note in result.notes:
        print(f"srvscan: {note}", file=sys.stderr)
    paths = [p.as_posix() for p in result.matches]
    if ns.format == "json":
        sys.stdout.write(json.dumps({"matches": paths, "notes": result.notes}, indent=2) + "\n")
    else:
        sys.stdout.write("".join(p + "\n" for p in paths))
    return EXIT_CLEAN


def cmd_fetch(ns: argparse.Namespace) -> int:
    addresses = list(ns.addresses)
    try:
        if ns.addresses_file is not None:
            addresses += [ln.strip() for ln in ns.addresses_file.read_text(encoding="utf-8").splitlines()
                          if ln.strip() and not ln.lstrip().startswith("#")]
        outcomes = corpus_fetch(addresses, ns.cache_dir, ns.chain, rate=ns.rate)
    except (OSError, ValueError, FetchError) as exc:
        print(f"srvscan: {exc}", file=sys.stderr)
        return EXIT_ERROR
    failed = False
    for o in outcomes:
        where = f" {o.path.as_posix()}" if o.path else ""
        note = f" ({o.note})" if o.note else ""
        sys.stdout.write(f"{o.status} {o.address}{where}{note}\n")
        failed |= o.status == "error"
    return EXIT_ERROR if failed else EXIT_CLEAN


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_CLEAN
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"scan": cmd_scan, "screen": cmd_screen, "fetch": cmd_fetch}[ns.command]
    return handler(ns)
