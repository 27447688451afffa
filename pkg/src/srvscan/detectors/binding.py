"""Missing context binding in the signed hash: chain, contract, account."""

from __future__ import annotations

import re

from ..frontend.ast import Param
from ..graph import atom_node
from ..taint import SrvType, Warning, make_warning
from .common import AnalysisContext

IDENTITY_NAME = re.compile(r"^_?(identity|account|wallet)$", re.IGNORECASE)

_ATOM = {SrvType.XCRA: "block.chainid", SrvType.XPRA: "address(this)"}
_WHAT = {SrvType.XCRA: "chain id", SrvType.XPRA: "verifying contract address"}


def _domain_helper_used(ctx: AnalysisContext) -> bool:
    """A domain-separator helper the unit does not define reaches the hash."""
    helpers = set(ctx.config.domain_helpers)
    if ctx.unknown_call_names(ctx.hash_closure) & helpers:
        return True
    defined = set(ctx.graph.state_vars) | {fn.name for fn in ctx.graph.functions.values()}
    return bool((ctx.hash_names & helpers) - defined)


def _missing_atom(ctx: AnalysisContext, t: SrvType) -> list[Warning]:
    if t not in ctx.config.enabled:
        return []
    if atom_node(_ATOM[t]) in ctx.hash_closure:
        return []
    if ctx.config.treat_eip712_domain_as_binding and _domain_helper_used(ctx):
        return []
    if ctx.sanitized_in_hash(t):
        return []
    evidence = ctx.filter_evidence(ctx.hash_evidence())
    note = f"signed hash does not commit to the {_WHAT[t]}"
    return [make_warning(ctx.graph, ctx.function, t, evidence, ctx.sink, [note])]


def detect_xcra(ctx: AnalysisContext) -> list[Warning]:
    return _missing_atom(ctx, SrvType.XCRA)


def detect_xpra(ctx: AnalysisContext) -> list[Warning]:
    return _missing_atom(ctx, SrvType.XPRA)


def _address_like(p: Param) -> bool:
    t = p.type_name.text()
    return t in ("address", "address payable") or (t[:1].isupper() and "[" not in t and "mapping" not in t)


def identity_params(ctx: AnalysisContext) -> list[Param]:
    """Parameters naming the account a signature acts for."""
    return [
        p for fn in ctx.slice_functions for p in fn.params
        if p.name and IDENTITY_NAME.match(p.name) and _address_like(p)
    ]


def detect_casr(ctx: AnalysisContext) -> list[Warning]:
    if SrvType.CASR not in ctx.config.enabled:
        return []
    targets = {p.id for p in identity_params(ctx)}
    if any(fn.name == "isValidSignature" for fn in ctx.slice_functions):
        # a smart account verifying for itself
        targets.add(atom_node("address(this)"))
    if not targets:
        return []
    if targets & ctx.hash_closure or ctx.sanitized_in_hash(SrvType.CASR):
        return []
    names = sorted(p.name for p in identity_params(ctx))
    who = ", ".join(names) if names else "address(this)"
    evidence = ctx.filter_evidence(ctx.hash_evidence() | targets)
    note = f"signed hash does not commit to the account it authorizes ({who})"
    return [make_warning(ctx.graph, ctx.function, SrvType.CASR, evidence, ctx.sink, [note])]
