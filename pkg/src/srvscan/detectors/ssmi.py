"""Signatures usable more than once: no consumed-state check keyed to them."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend.ast import Expr, NodeId, free_vars
from ..graph import stmt_exprs
from ..taint import SrvType, Warning, make_warning
from .common import AnalysisContext, keyed_reads, mapping_names, node_names


@dataclass
class StateUse:
    """Guard reads and keyed writes of one mapping within the slice."""

    reads: dict[NodeId, list[Expr]] = field(default_factory=dict)
    writes: dict[NodeId, list[Expr]] = field(default_factory=dict)


def replay_domain(ctx: AnalysisContext) -> set[str]:
    """Names a replay-protecting key may be built from: anything that flows
    into the recovery, plus the signer."""
    return node_names(ctx.graph, ctx.sink_closure | ctx.hash_closure) | ctx.signer_vars


def state_uses(ctx: AnalysisContext) -> dict[str, StateUse]:
    g = ctx.graph
    maps = mapping_names(g, ctx.unit)
    fset = ctx.slice.function_set
    out: dict[str, StateUse] = {}
    for n, q in g.function_of.items():
        if q not in fset or g.kind.get(n) != "stmt":
            continue
        if n in g.guards:
            for e in stmt_exprs(g.stmt[n]):
                for m, key in keyed_reads(e):
                    if m in maps:
                        out.setdefault(m, StateUse()).reads.setdefault(n, []).append(key)
        for m, key in g.key_writes.get(n, ()):
            if m in maps:
                out.setdefault(m, StateUse()).writes.setdefault(n, []).append(key)
    return out


def _keyed_by(keys: list[Expr], domain: set[str], exclude: frozenset[str]) -> bool:
    return any(free_vars(k, exclude) & domain for k in keys)


def consumed_in_hash(ctx: AnalysisContext, uses: dict[str, StateUse], domain: set[str]) -> set[str]:
    """Mappings whose value is bound into the hash and advanced under a
    related key, as per-signer nonces are."""
    read = set()
    for n in ctx.hash_closure:
        read |= ctx.graph.uses.get(n, set())
    return {
        m for m, use in uses.items()
        if m in read and any(_keyed_by(keys, domain, ctx.exclude) for keys in use.writes.values())
    }


def detect_ssmi(ctx: AnalysisContext) -> list[Warning]:
    if SrvType.SSMI not in ctx.config.enabled:
        return []
    domain = replay_domain(ctx)
    uses = state_uses(ctx)
    if consumed_in_hash(ctx, uses, domain):
        return []
    oracle = ctx.sanitized(SrvType.SSMI)
    partial: set[NodeId] = set()
    for m, use in sorted(uses.items()):
        reads = [n for n, keys in use.reads.items() if _keyed_by(keys, domain, ctx.exclude)]
        writes = [n for n, keys in use.writes.items() if _keyed_by(keys, domain, ctx.exclude)]
        if reads and writes:
            return []
        if m in oracle and use.reads and use.writes:
            return []
        partial.update(reads)
        partial.update(writes)
    evidence = ctx.filter_evidence(partial)
    note = "no state check keyed by the hash, signature or signer is both read and updated"
    return [make_warning(ctx.graph, ctx.function, SrvType.SSMI, evidence, ctx.sink, [note])]
