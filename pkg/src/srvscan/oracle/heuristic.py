"""Deterministic stand-in for the language model.

Every answer is computed from the prompt inputs alone: the code text is
parsed again with the frontend, so nothing from the caller's own analysis
leaks into the oracle.
"""

from __future__ import annotations

import json
import re
from collections import deque
from typing import Iterable, Optional

from ..frontend import load
from ..frontend.ast import (
    ENV_ATOMS,
    Assign,
    AstUnit,
    Binary,
    Call,
    Expr,
    ExprStmt,
    FunctionDef,
    Ident,
    If,
    Index,
    Member,
    ModifierDef,
    Node,
    Param,
    Stmt,
    TupleExpr,
    Unary,
    VarDecl,
    free_vars,
    walk,
)
from ..frontend.inheritance import CycleError
from ..frontend.lexer import LexError
from ..frontend.parser import ParseError
from ..frontend.sinks import SinkKind, SinkSite, locate_sinks, non_variable_names
from ..graph import always_exits, build_ipdg, is_require, root_var, stmt_exprs
from ..guards import V_INVALID, Guard, constant_table, match_key, rejects, s_invalid

HASH_FUNCS = {"keccak256", "sha256", "sha3", "encode", "encodePacked", "encodeWithSelector",
              "encodeWithSignature", "toEthSignedMessageHash", "toTypedDataHash", "_hashTypedDataV4"}
IDENTITY_NAME = re.compile(r"^_?(identity|account|wallet)$", re.IGNORECASE)


def _parse(code: str) -> Optional[AstUnit]:
    try:
        return load(code, "<oracle>")
    except (ParseError, LexError, CycleError):
        return None


def _owner(unit: AstUnit, qname: str) -> Optional[FunctionDef | ModifierDef]:
    for c in unit.contracts:
        for fn in c.functions:
            if fn.qualified_name == qname:
                return fn
        for m in c.modifiers:
            if f"{c.name}.{m.name}" == qname:
                return m
    for fn in unit.free_functions:
        if fn.qualified_name == qname:
            return fn
    return None


def _bodies(unit: AstUnit) -> Iterable[FunctionDef]:
    for c in unit.contracts:
        for fn in c.functions:
            if fn.body is not None:
                yield fn
    for fn in unit.free_functions:
        if fn.body is not None:
            yield fn


def _node(root: Node, node_id: int) -> Optional[Node]:
    return next((n for n in walk(root) if n.id == node_id), None)


def _sink_exprs(owner, site: SinkSite) -> list[Expr]:
    out: list[Expr] = []
    for ref in (site.hash_arg, site.v_arg, site.r_arg, site.s_arg, site.signature_arg):
        if ref is not None and owner.body is not None:
            e = _node(owner.body, ref.node)
            if isinstance(e, Expr):
                out.append(e)
    return out


def _local_defs(owner, exclude: frozenset[str]) -> dict[str, set[str]]:
    """Local name -> names its assigned values read."""
    params = {p.name for p in owner.params if p.name}
    defs: dict[str, set[str]] = {}
    for n in walk(owner.body):
        if isinstance(n, VarDecl):
            reads = free_vars(n.value, exclude) if n.value is not None else set()
            for d in n.decls:
                if d is not None:
                    defs.setdefault(d.name, set()).update(reads)
        elif isinstance(n, Assign):
            targets = n.target.items if isinstance(n.target, TupleExpr) else [n.target]
            reads = free_vars(n.value, exclude)
            for t in targets:
                if isinstance(t, Ident) and t.name not in params:
                    defs.setdefault(t.name, set()).update(reads)
    return defs


def sink_key_variables(unit: AstUnit) -> set[str]:
    exclude = non_variable_names(unit)
    names: set[str] = set()
    for site in locate_sinks(unit):
        owner = _owner(unit, site.enclosing_function)
        if owner is None or owner.body is None:
            continue
        if site.kind is SinkKind.ASSEMBLY:
            seeds = set(site.hash_arg.free_variables) if site.hash_arg else set()
        else:
            seeds = set()
            for e in _sink_exprs(owner, site):
                seeds |= free_vars(e, exclude)
        defs = _local_defs(owner, exclude)
        queue = deque(sorted(seeds))
        seen = set(seeds)
        while queue:
            x = queue.popleft()
            for y in sorted(defs.get(x, ())):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        names |= seen
    return names - ENV_ATOMS


def key_variables(code: str) -> str:
    unit = _parse(code)
    if unit is None:
        doc = {"signature_verification": False, "reason": "code could not be parsed", "key_variables": []}
    elif not locate_sinks(unit):
        doc = {"signature_verification": False, "reason": "no signature verification", "key_variables": []}
    else:
        doc = {"signature_verification": True, "reason": "signature recovery found",
               "key_variables": sorted(sink_key_variables(unit))}
    return _answer("Traced the hash and signature arguments of each recovery call.", doc)


# ---------------------------------------------------------------- sanitizers


def _is_hash_call(c: Call) -> bool:
    callee = c.callee
    name = callee.name if isinstance(callee, (Ident, Member)) else ""
    return name in HASH_FUNCS


def _assigned_name(stmt: Node) -> list[str]:
    if isinstance(stmt, VarDecl):
        return [d.name for d in stmt.decls if d is not None]
    if isinstance(stmt, ExprStmt) and isinstance(stmt.expr, Assign) and isinstance(stmt.expr.target, Ident):
        return [stmt.expr.target.name]
    return []


def bound_with(unit: AstUnit, anchor: str, exclude: frozenset[str], scope: Optional[Iterable[FunctionDef]] = None) -> set[str]:
    """Names compared for equality with ``anchor`` or hashed together with it."""
    out: set[str] = set()
    roots: list[tuple[list[Expr], list[str]]] = []
    for fn in scope if scope is not None else _bodies(unit):
        for n in walk(fn.body):
            if isinstance(n, Stmt):
                roots.append((stmt_exprs(n), _assigned_name(n)))
    if scope is None:
        for c in unit.contracts:
            for sv in c.state_vars:
                if sv.value is not None:
                    roots.append(([sv.value], [sv.name]))
    for exprs, lhs in roots:
        for top in exprs:
            hit = False
            for e in walk(top):
                if isinstance(e, Binary) and e.op in ("==", "!="):
                    left, right = free_vars(e.left, exclude), free_vars(e.right, exclude)
                    if anchor in left:
                        out |= right
                    if anchor in right:
                        out |= left
                elif isinstance(e, Call) and _is_hash_call(e):
                    arg_vars = [free_vars(a, exclude) for a in e.args]
                    if any(anchor in v for v in arg_vars):
                        hit = True
                        for v in arg_vars:
                            out |= v
            if hit:
                out.update(lhs)
    out.discard(anchor)
    return out - ENV_ATOMS


def _identity_params(unit: AstUnit) -> set[str]:
    out: set[str] = set()
    for fn in _bodies(unit):
        for p in fn.params:
            if p.name and IDENTITY_NAME.match(p.name) and _address_like(p):
                out.add(p.name)
    return out


def _address_like(p: Param) -> bool:
    t = p.type_name.text()
    return t in ("address", "address payable") or (t[:1].isupper() and "[" not in t and "mapping" not in t)


def signer_names(unit: AstUnit) -> set[str]:
    """Variables holding, or compared against, a recovered signer."""
    exclude = non_variable_names(unit)
    sink_ids = {s.id for s in locate_sinks(unit)}
    sink_fns = {s.enclosing_function.rsplit(".", 1)[-1] for s in locate_sinks(unit)}
    out: set[str] = set()

    def is_recovery(e: Expr) -> bool:
        for n in walk(e):
            if n.id in sink_ids:
                return True
            if isinstance(n, Call) and isinstance(n.callee, Ident) and n.callee.name in sink_fns:
                return True
        return False

    for fn in _bodies(unit):
        for n in walk(fn.body):
            if isinstance(n, VarDecl) and n.value is not None and is_recovery(n.value):
                out.update(d.name for d in n.decls if d is not None)
            elif isinstance(n, Assign) and is_recovery(n.value):
                out |= {root_var(n.target)} - {None}
            elif isinstance(n, Binary) and n.op in ("==", "!="):
                if is_recovery(n.left):
                    out |= free_vars(n.right, exclude)
                elif is_recovery(n.right):
                    out |= free_vars(n.left, exclude)
    return out - ENV_ATOMS


def _guard_exprs(fn: FunctionDef) -> list[Expr]:
    out: list[Expr] = []
    for n in walk(fn.body):
        if is_require(n) and n.expr.args:
            out.append(n.expr.args[0])
        elif isinstance(n, If):
            out.append(n.cond)
    return out


def _keyed_reads(e: Expr, mapping_names: set[str]) -> list[tuple[str, Expr]]:
    return [(root_var(n), n.index) for n in walk(e)
            if isinstance(n, Index) and n.index is not None and root_var(n) in mapping_names]


def _keyed_writes(e: Node, mapping_names: set[str]) -> list[tuple[str, Expr]]:
    out = []
    for n in walk(e):
        target = None
        if isinstance(n, Assign):
            target = n.target
        elif isinstance(n, Unary) and n.op in ("++", "--", "delete"):
            target = n.operand
        if target is not None:
            while isinstance(target, Member):
                target = target.base
            if isinstance(target, Index) and target.index is not None and root_var(target) in mapping_names:
                out.append((root_var(target), target.index))
    return out


def state_tracking(unit: AstUnit) -> set[str]:
    """Mappings read in a guard and written, keyed by signature-derived values,
    or consumed by post-increment inside a hashed value."""
    exclude = non_variable_names(unit)
    derived = sink_key_variables(unit) | signer_names(unit)
    mappings = {sv.name for c in unit.contracts for sv in c.state_vars if sv.type_name.is_mapping}
    guarded: set[str] = set()
    written: set[str] = set()
    consumed: set[str] = set()
    for fn in _bodies(unit):
        for g in _guard_exprs(fn):
            for m, k in _keyed_reads(g, mappings):
                if free_vars(k, exclude) & derived:
                    guarded.add(m)
        for m, k in _keyed_writes(fn.body, mappings):
            if free_vars(k, exclude) & derived:
                written.add(m)
        for n in walk(fn.body):
            if isinstance(n, Call) and _is_hash_call(n):
                for a in n.args:
                    for u in walk(a):
                        if isinstance(u, Unary) and u.op == "++" and not u.prefix:
                            m = root_var(u.operand)
                            if m in mappings:
                                consumed.add(m)
    return (guarded & written) | consumed


def range_checked(unit: AstUnit, half_order: Optional[int] = None) -> set[str]:
    consts = constant_table(unit)
    out: set[str] = set()
    bad_s = s_invalid(half_order) if half_order is not None else s_invalid()
    for site in locate_sinks(unit):
        if site.kind is not SinkKind.BARE or site.v_arg is None or site.s_arg is None:
            continue
        owner = _owner(unit, site.enclosing_function)
        if owner is None or owner.body is None:
            continue
        v_key = match_key(_node(owner.body, site.v_arg.node))
        s_key = match_key(_node(owner.body, site.s_arg.node))
        guards = [Guard(n.expr.args[0], True, n.id) for n in walk(owner.body) if is_require(n) and n.expr.args]
        for n in walk(owner.body):
            if isinstance(n, If) and always_exits(n.then):
                guards.append(Guard(n.cond, False, n.id))
            elif isinstance(n, If) and always_exits(n.orelse):
                guards.append(Guard(n.cond, True, n.id))
        for key, bad in ((v_key, V_INVALID), (s_key, bad_s)):
            for g in guards:
                if all(rejects(g, key, x, consts) for x in bad):
                    out.add(key)
                    break
    return out


def sanitized_variables(code: str, srv_types: list[str]) -> str:
    unit = _parse(code)
    doc: dict[str, list[str]] = {}
    if unit is not None and locate_sinks(unit):
        exclude = non_variable_names(unit)
        for t in srv_types:
            names: set[str] = set()
            if t == "X-CRA":
                names = bound_with(unit, "block.chainid", exclude)
            elif t == "X-PRA":
                names = bound_with(unit, "address(this)", exclude)
            elif t == "CASR":
                for ident in sorted(_identity_params(unit)):
                    names |= bound_with(unit, ident, exclude)
                verifiers = [fn for fn in _bodies(unit) if fn.name == "isValidSignature"]
                if verifiers:
                    names |= bound_with(unit, "address(this)", exclude, verifiers)
            elif t == "SSMI":
                names = state_tracking(unit)
            elif t == "SMA":
                names = range_checked(unit)
            if names:
                doc[t] = sorted(names)
    return _answer("Applied the per-class identification rules.", {"sanitized": doc})


# ---------------------------------------------------------------- sequences


def function_sequences(warned: list[str], code: str, max_sequences: int = 5, max_length: int = 4) -> str:
    unit = _parse(code)
    out: dict[str, list[list[str]]] = {}
    if unit is not None:
        graph = build_ipdg(unit)
        edges: dict[str, set[str]] = {q: set() for q in graph.functions}
        for site, targets in graph.callees.items():
            caller = graph.function_of.get(site)
            if caller in edges:
                edges[caller].update(t for t in targets if t in graph.functions)
        entries = sorted(q for q, fn in graph.functions.items() if fn.is_entry and fn.kind == "function")
        for name in warned:
            targets = {q for q, fn in graph.functions.items() if fn.name == name}
            paths: list[list[str]] = []
            for e in entries:
                paths.extend(_simple_paths(edges, e, targets, max_length))
            short = sorted({tuple(graph.functions[q].name for q in p) for p in paths}, key=lambda p: (len(p), p))
            out[name] = [list(p) for p in short[:max_sequences]]
    return _answer("Enumerated call paths from entry points.", {"sequences": out})


def _simple_paths(edges: dict[str, set[str]], start: str, targets: set[str], max_length: int) -> list[list[str]]:
    out: list[list[str]] = []
    stack = [[start]]
    while stack:
        path = stack.pop()
        if path[-1] in targets:
            out.append(path)
            continue
        if len(path) >= max_length:
            continue
        for nxt in sorted(edges.get(path[-1], ()), reverse=True):
            if nxt not in path:
                stack.append(path + [nxt])
    return out


def _answer(note: str, doc: dict) -> str:
    return f"{note}\n{json.dumps(doc, sort_keys=True)}"
