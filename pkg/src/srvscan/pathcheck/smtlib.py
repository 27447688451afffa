"""SMT-LIB2 rendering and an external solver subprocess."""

from __future__ import annotations

import re
import subprocess
from typing import Optional, Sequence

from .terms import (
    And,
    App,
    BoolVal,
    Eq,
    Ite,
    Lit,
    Not,
    Or,
    PathConstraintSet,
    Sort,
    Term,
    Var,
    applications,
    literals,
)
from .verdict import ReachabilityVerdict, SolverError, Status

DEFAULT_ARGS = ("-in", "-smt2")


def symbol(name: str) -> str:
    clean = name.replace("|", "!").replace("\\", "/")
    return f"|{clean}|"


def lit_symbol(sort: Sort, value: str) -> str:
    return symbol(f"lit:{sort.value}:{value}")


def _sort(s: Sort) -> str:
    return s.value


def term(t: Term) -> str:
    if isinstance(t, Var):
        return symbol(t.name)
    if isinstance(t, Lit):
        return lit_symbol(t.sort, t.value)
    if isinstance(t, BoolVal):
        return "true" if t.value else "false"
    if isinstance(t, App):
        if not t.args:
            return symbol(t.fn)
        return f"({symbol(t.fn)} {' '.join(term(a) for a in t.args)})"
    if isinstance(t, Eq):
        return f"(= {term(t.a)} {term(t.b)})"
    if isinstance(t, Not):
        return f"(not {term(t.a)})"
    if isinstance(t, And):
        return f"(and {' '.join(term(a) for a in t.args)})"
    if isinstance(t, Or):
        return f"(or {' '.join(term(a) for a in t.args)})"
    if isinstance(t, Ite):
        return f"(ite {term(t.c)} {term(t.a)} {term(t.b)})"
    raise TypeError(f"unexpected term {t!r}")


def to_smtlib(pcs: PathConstraintSet, with_model: bool = True) -> str:
    lines = ["(set-logic QF_UF)", "(declare-sort Addr 0)", "(declare-sort U 0)"]
    for name, sort in sorted(pcs.variables.items()):
        lines.append(f"(declare-const {symbol(name)} {_sort(sort)})")
    lits = literals(pcs.assertions)
    for sort in (Sort.ADDR, Sort.U):
        values = sorted(lits.get(sort, ()))
        for v in values:
            lines.append(f"(declare-const {lit_symbol(sort, v)} {_sort(sort)})")
        if len(values) > 1:
            lines.append(f"(assert (distinct {' '.join(lit_symbol(sort, v) for v in values)}))")
    for name, d in sorted(pcs.uninterpreted.items()):
        args = " ".join(_sort(s) for s in d.arg_sorts)
        lines.append(f"(declare-fun {symbol(name)} ({args}) {_sort(d.sort)})")
    # injectivity, instantiated on the applications that occur
    by_fn: dict[str, list[App]] = {}
    for a in applications(pcs.assertions):
        d = pcs.uninterpreted.get(a.fn)
        if d is not None and d.injective and a.args:
            by_fn.setdefault(a.fn, []).append(a)
    for fn in sorted(by_fn):
        apps = by_fn[fn]
        for i, p in enumerate(apps):
            for q in apps[i + 1:]:
                same = " ".join(f"(= {term(x)} {term(y)})" for x, y in zip(p.args, q.args))
                same = same if len(p.args) == 1 else f"(and {same})"
                lines.append(f"(assert (=> (= {term(p)} {term(q)}) {same}))")
    for a in pcs.assertions:
        lines.append(f"(assert {term(a)})")
    lines.append("(check-sat)")
    if with_model and pcs.variables:
        lines.append(f"(get-value ({' '.join(symbol(n) for n in sorted(pcs.variables))}))")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


_PAIR = re.compile(r"\(\s*(\|[^|]*\||[^\s()]+)\s+(\|[^|]*\||[^\s()]+|\([^()]*\))\s*\)")


def parse_output(stdout: str) -> tuple[Status, Optional[dict[str, str]]]:
    lines = [ln.strip() for ln in stdout.splitlines() if ln.strip()]
    if not lines:
        raise SolverError("solver produced no output")
    head = lines[0]
    if head.startswith("(error"):
        raise SolverError(head)
    status = {"sat": Status.SAT, "unsat": Status.UNSAT, "unknown": Status.UNKNOWN, "timeout": Status.TIMEOUT}.get(head)
    if status is None:
        raise SolverError(f"unexpected solver output: {head[:80]!r}")
    if status is not Status.SAT:
        return status, None
    model: dict[str, str] = {}
    rest = " ".join(lines[1:])
    if rest.startswith("(error"):
        return status, None
    for name, value in _PAIR.findall(rest):
        model[name.strip("|")] = value.strip("|")
    return status, model


def solve(pcs: PathConstraintSet, solver_path: str = "z3", timeout_ms: int = 5000,
          args: Sequence[str] = DEFAULT_ARGS) -> ReachabilityVerdict:
    text = to_smtlib(pcs)
    try:
        proc = subprocess.run(
            [solver_path, *args], input=text, capture_output=True, text=True, timeout=timeout_ms / 1000.0
        )
    except subprocess.TimeoutExpired:
        return ReachabilityVerdict(Status.TIMEOUT, None, pcs.sequence, "external solver timed out")
    except OSError as exc:
        raise SolverError(f"cannot run solver {solver_path!r}: {exc}") from exc
    status, model = parse_output(proc.stdout)
    return ReachabilityVerdict(status, model, pcs.sequence)
