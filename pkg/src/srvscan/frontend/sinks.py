"""Canonical signature-recovery call sites."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from .ast import (
    AstUnit,
    Call,
    ContractDef,
    Expr,
    FunctionDef,
    Ident,
    Member,
    ModifierDef,
    Node,
    NodeId,
    Opaque,
    free_vars,
    walk,
)

RECOVER_ENTRY_POINTS = ("recover", "tryRecover")


class SinkKind(Enum):
    BARE = "BareEcrecover"
    LIBRARY_RECOVER = "LibraryRecover"
    LIBRARY_TRY_RECOVER = "LibraryTryRecover"
    ASSEMBLY = "AssemblyOpaque"


@dataclass(frozen=True)
class ExprRef:
    node: NodeId
    free_variables: frozenset[str]


@dataclass
class SinkSite:
    id: NodeId
    enclosing_function: str
    hash_arg: Optional[ExprRef]
    v_arg: Optional[ExprRef]
    r_arg: Optional[ExprRef]
    s_arg: Optional[ExprRef]
    kind: SinkKind
    signature_arg: Optional[ExprRef] = None
    library: str = ""
    # (node id, qualified function) pairs where this site executes; differs
    # from (id, enclosing_function) only for sinks inside modifiers
    instances: list[tuple[NodeId, str]] = field(default_factory=list)

    @property
    def contract(self) -> str:
        return self.enclosing_function.split(".", 1)[0]


def is_ecdsa_library(name: str) -> bool:
    return "ECDSA" in name.rsplit(".", 1)[-1].upper()


def non_variable_names(unit: AstUnit) -> frozenset[str]:
    """Identifiers that name types, libraries or functions rather than variables."""
    names: set[str] = set()
    variables: set[str] = set()
    for c in unit.contracts:
        names.add(c.name)
        names.update(s.name for s in c.structs)
        names.update(e.name for e in c.enums)
        names.update(e.name for e in c.events)
        names.update(e.name for e in c.errors)
        names.update(m.name for m in c.modifiers)
        names.update(f.name for f in c.functions)
        for u in c.using_for:
            names.update(u.library.split(","))
        variables.update(v.name for v in c.state_vars)
    for node in _all_nodes(unit):
        if hasattr(node, "name") and type(node).__name__ in ("LocalVar", "Param") and node.name:
            variables.add(node.name)
    for node in _all_nodes(unit):
        # library-style calls on undeclared names (imported libraries)
        if isinstance(node, Call) and isinstance(node.callee, Member) and isinstance(node.callee.base, Ident):
            base = node.callee.base.name
            if base not in variables:
                names.add(base)
    return frozenset(names - variables)


def _all_nodes(unit: AstUnit) -> Iterator[Node]:
    for c in unit.contracts:
        yield from walk(c)
    for f in unit.free_functions:
        yield from walk(f)


def expr_ref(e: Optional[Expr], exclude: frozenset[str]) -> Optional[ExprRef]:
    if e is None:
        return None
    return ExprRef(e.id, frozenset(free_vars(e, exclude)))


def _using_libraries(unit: AstUnit, c: ContractDef) -> set[str]:
    libs: set[str] = set()
    for base in c.linearization or [c.name]:
        bc = unit.contract(base)
        if bc is None:
            continue
        for u in bc.using_for:
            libs.update(u.library.split(","))
    return libs


def classify_call(call: Call, using_libs: set[str]) -> Optional[tuple[SinkKind, str]]:
    callee = call.callee
    if isinstance(callee, Ident) and callee.name == "ecrecover":
        return SinkKind.BARE, ""
    if isinstance(callee, Member) and callee.name in RECOVER_ENTRY_POINTS:
        kind = SinkKind.LIBRARY_RECOVER if callee.name == "recover" else SinkKind.LIBRARY_TRY_RECOVER
        if isinstance(callee.base, (Ident, Member)):
            base_name = callee.base.name
            if is_ecdsa_library(base_name):
                return kind, base_name
        # using-for form: hash.recover(sig)
        for lib in sorted(using_libs):
            if is_ecdsa_library(lib):
                return kind, lib
    return None


def _make_site(unit: AstUnit, call: Call, kind: SinkKind, lib: str, fn_name: str, exclude: frozenset[str]) -> SinkSite:
    args = list(call.args)
    if kind is SinkKind.BARE:
        h, v, r, s = (args + [None] * 4)[:4]
        return SinkSite(call.id, fn_name, expr_ref(h, exclude), expr_ref(v, exclude), expr_ref(r, exclude),
                        expr_ref(s, exclude), kind)
    base = call.callee.base
    if not (isinstance(base, (Ident, Member)) and is_ecdsa_library(base.name)):
        # bound-library call: the receiver is the first argument
        args = [base] + args
    h = args[0] if args else None
    site = SinkSite(call.id, fn_name, expr_ref(h, exclude), None, None, None, kind, library=lib)
    rest = args[1:]
    if len(rest) == 1:
        site.signature_arg = expr_ref(rest[0], exclude)
    elif len(rest) == 2:
        # recover(hash, r, vs)
        site.r_arg = expr_ref(rest[0], exclude)
        site.signature_arg = expr_ref(rest[1], exclude)
    elif len(rest) >= 3:
        site.v_arg, site.r_arg, site.s_arg = (expr_ref(a, exclude) for a in rest[:3])
    return site


def _owners(unit: AstUnit) -> Iterator[tuple[ContractDef | None, FunctionDef | ModifierDef, str]]:
    for c in unit.contracts:
        for fn in c.functions:
            yield c, fn, fn.qualified_name
        for m in c.modifiers:
            yield c, m, f"{c.name}.{m.name}"
    for fn in unit.free_functions:
        yield None, fn, fn.qualified_name


def locate_sinks(unit: AstUnit) -> list[SinkSite]:
    exclude = non_variable_names(unit)
    sites: list[SinkSite] = []
    by_origin: dict[NodeId, SinkSite] = {}
    for c, owner, qname in _owners(unit):
        if owner.body is None:
            continue
        libs = _using_libraries(unit, c) if c is not None else set()
        for node in walk(owner.body):
            cloned = node.id in unit.clone_origin
            site: Optional[SinkSite] = None
            if isinstance(node, Call):
                hit = classify_call(node, libs)
                if hit is not None and not cloned:
                    site = _make_site(unit, node, hit[0], hit[1], qname, exclude)
            elif isinstance(node, Opaque) and node.ecrecover_count and not cloned:
                ref = ExprRef(node.id, frozenset(node.reads) | frozenset(node.atoms))
                for _ in range(node.ecrecover_count):
                    s = SinkSite(node.id, qname, ref, None, None, None, SinkKind.ASSEMBLY)
                    s.instances.append((node.id, qname))
                    sites.append(s)
                continue
            if site is not None:
                if isinstance(owner, FunctionDef):
                    site.instances.append((node.id, qname))
                sites.append(site)
                by_origin[node.id] = site
    # sinks written inside modifiers execute wherever the modifier was inlined
    for c, owner, qname in _owners(unit):
        if not isinstance(owner, FunctionDef) or owner.body is None:
            continue
        for node in walk(owner.body):
            origin = unit.clone_origin.get(node.id)
            if origin is not None and origin in by_origin and isinstance(node, (Call,)):
                by_origin[origin].instances.append((node.id, qname))
    return sites


def instance_site(unit: AstUnit, site: SinkSite, node_id: NodeId, fn_name: str) -> SinkSite:
    """View of ``site`` as executed at a (possibly cloned) call node."""
    if node_id == site.id:
        return SinkSite(site.id, fn_name, site.hash_arg, site.v_arg, site.r_arg, site.s_arg, site.kind,
                        site.signature_arg, site.library, [(node_id, fn_name)])
    exclude = non_variable_names(unit)
    for c, owner, qname in _owners(unit):
        if qname != fn_name or owner.body is None:
            continue
        for node in walk(owner.body):
            if node.id == node_id and isinstance(node, Call):
                libs = _using_libraries(unit, c) if c is not None else set()
                kind, lib = classify_call(node, libs) or (site.kind, site.library)
                clone = _make_site(unit, node, kind, lib, fn_name, exclude)
                clone.instances = [(node_id, fn_name)]
                return clone
    raise KeyError(node_id)
