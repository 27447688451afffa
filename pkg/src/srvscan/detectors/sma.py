"""Malleable signatures: ``v`` and ``s`` accepted outside their canonical range."""

from __future__ import annotations

from typing import Optional

from ..frontend.ast import Expr, NodeId, free_vars
from ..frontend.sinks import SinkKind
from ..guards import (
    V_INVALID,
    V_VALID,
    Evaluator,
    Guard,
    constant_table,
    guard_paths,
    match_key,
    mentions,
    path_rejects_all,
    rejects,
    s_invalid,
)
from ..taint import SrvType, Warning, is_opaque, make_warning
from .common import AnalysisContext
from .library import exempt_library
from .ssmi import state_uses

KNOWN_FP_NOTE = (
    "known false-positive pattern: a signer-keyed state guard is reset after use, "
    "which may already stop a malleated copy from being accepted"
)
OPAQUE_NOTE = "recovery happens in inline assembly whose checks cannot be inspected"


def _tainted(ctx: AnalysisContext, sources: set[NodeId]) -> bool:
    return any(ctx.taint.is_tainted(n) for n in sources)


def _checked(ctx: AnalysisContext, name: str, expr: Optional[Expr], bad: tuple[int, ...],
             paths: list[list[Guard]], consts: dict) -> tuple[bool, set[NodeId]]:
    """(every path rejects every bad value, guard nodes that reject some)."""
    if expr is None:
        return False, set()
    value = Evaluator({}, consts).value(expr)
    if isinstance(value, int) and not isinstance(value, bool):
        ok = value not in bad and (name != "v_arg" or value in V_VALID)
        return ok, set()
    key = match_key(expr)
    partial = {
        g.node for p in paths for g in p
        if mentions(g.cond, key) and any(rejects(g, key, x, consts) for x in bad)
    }
    if paths and all(path_rejects_all(p, key, bad, consts) for p in paths):
        return True, partial
    oracle = ctx.sanitized(SrvType.SMA)
    if (key in oracle) and not _tainted(ctx, ctx.sources_of(name)):
        return True, partial
    return False, partial


def _zero_one_encoding(paths: list[list[Guard]], key: str, consts: dict) -> bool:
    """Every path admits only v in {0, 1}."""
    others = tuple(x for x in V_INVALID if x not in (0, 1)) + V_VALID
    return bool(paths) and all(path_rejects_all(p, key, others, consts) for p in paths)


def known_fp_pattern(ctx: AnalysisContext) -> bool:
    """A signer-keyed mapping guarded then written (reset) in the slice."""
    signers = ctx.signer_vars
    if not signers:
        return False
    for use in state_uses(ctx).values():
        read = any(free_vars(k, ctx.exclude) & signers for keys in use.reads.values() for k in keys)
        write = any(free_vars(k, ctx.exclude) & signers for keys in use.writes.values() for k in keys)
        if read and write:
            return True
    return False


def detect_sma(ctx: AnalysisContext) -> list[Warning]:
    if SrvType.SMA not in ctx.config.enabled:
        return []
    site = ctx.site
    g = ctx.graph
    notes: list[str] = []
    evidence: set[NodeId] = set()
    if site.kind is SinkKind.ASSEMBLY:
        evidence = set(g.predecessors(ctx.sink))
        notes.append(OPAQUE_NOTE)
        w = make_warning(g, ctx.function, SrvType.SMA, ctx.filter_evidence(evidence), ctx.sink, notes)
        return [w]
    if site.kind in (SinkKind.LIBRARY_RECOVER, SinkKind.LIBRARY_TRY_RECOVER):
        exempt, why = exempt_library(ctx.unit, site.library, ctx.config)
        if exempt:
            return []
        notes.append(why)
        evidence = ctx.sources_of("signature_arg") | ctx.sources_of("v_arg") | ctx.sources_of("s_arg")
    else:
        fn = g.functions.get(ctx.function)
        paths = guard_paths(fn.body if fn else None, ctx.call_id, ctx.config.max_guard_paths)
        consts = constant_table(ctx.unit)
        v_ok, v_partial = _checked(ctx, "v_arg", ctx.arg("v_arg"), V_INVALID, paths, consts)
        s_bad = s_invalid(ctx.config.secp256k1_half_order)
        s_ok, s_partial = _checked(ctx, "s_arg", ctx.arg("s_arg"), s_bad, paths, consts)
        if v_ok and s_ok:
            return []
        if not v_ok:
            notes.append("v is not restricted to 27 or 28 on every path to the recovery")
            v_expr = ctx.arg("v_arg")
            if v_expr is not None and _zero_one_encoding(paths, match_key(v_expr), consts):
                notes.append("v is checked against the 0/1 encoding, which is not accepted as a range check")
        if not s_ok:
            notes.append("s is not bounded by half the curve order on every path to the recovery")
        evidence = v_partial | s_partial | ctx.sources_of("v_arg") | ctx.sources_of("s_arg")
    if known_fp_pattern(ctx):
        notes.append(KNOWN_FP_NOTE)
    evidence = ctx.filter_evidence(evidence)
    if any(is_opaque(g, n) for n in evidence):
        notes.append(OPAQUE_NOTE)
    return [make_warning(g, ctx.function, SrvType.SMA, evidence, ctx.sink, notes)]
