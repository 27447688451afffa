"""Facts about one sink shared by the detectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

from ..frontend.ast import (
    ENV_ATOMS,
    Assign,
    AstUnit,
    Binary,
    Call,
    Expr,
    FunctionDef,
    Ident,
    Index,
    Member,
    NodeId,
    Return,
    VarDecl,
    atom_of,
    free_vars,
    walk,
)
from ..frontend.sinks import SinkKind, SinkSite, non_variable_names
from ..graph import EdgeKind, Ipdg, atom_node, dependencies, root_var, stmt_exprs, unknown_node
from ..slicer import Slice
from ..taint import SrvType, TaintState, collect_warning_nodes
from .config import DetectorConfig

DATA = (EdgeKind.DATA,)


def find_expr(graph: Ipdg, node: NodeId, expr_id: NodeId) -> Optional[Expr]:
    stmt = graph.stmt.get(node)
    if stmt is None:
        return None
    for e in stmt_exprs(stmt):
        for x in walk(e):
            if x.id == expr_id:
                return x
    return None


def callee_name(call: Call) -> str:
    c = call.callee
    if isinstance(c, Ident):
        return c.name
    if isinstance(c, Member):
        return c.name
    return ""


def expr_sources(
    graph: Ipdg, node: NodeId, expr: Optional[Expr], exclude: frozenset[str], consumers: Iterable[NodeId] = ()
) -> set[NodeId]:
    """Graph nodes whose values flow into ``expr`` as evaluated at ``node``.

    ``consumers`` are further nodes the statement's values are wired into,
    such as the callee node of the call that uses ``expr``.
    """
    if expr is None:
        return set()
    names = free_vars(expr, exclude)
    fn = graph.function_of.get(node)
    out: set[NodeId] = set()
    for c in {node, *consumers}:
        for p in graph.predecessors(c, DATA):
            if not graph.data_labels.get((p, c), set()) & names:
                continue
            if c == node or graph.function_of.get(p) in (fn, None):
                out.add(p)
    for x in walk(expr):
        if not isinstance(x, Expr):
            continue
        atom = atom_of(x)
        if atom is not None:
            out.add(atom_node(atom))
        if isinstance(x, Call):
            u = unknown_node(x.id)
            if u in graph.nodes:
                out.add(u)
                continue
            name = callee_name(x)
            for q in graph.callees.get(node, ()):
                f = graph.functions.get(q)
                if f is not None and f.name == name:
                    out |= graph.returns.get(q, set())
    return out


def node_names(graph: Ipdg, nodes: Iterable[NodeId]) -> set[str]:
    out: set[str] = set()
    for n in nodes:
        out |= graph.uses.get(n, set()) | graph.defs.get(n, set()) | graph.atoms.get(n, set())
    return out


def name_matches(name: str, names: set[str]) -> bool:
    return name in names or name.split(".", 1)[0] in names or name.split("[", 1)[0] in names


def defs_of(graph: Ipdg, names: Iterable[str], functions: Iterable[str]) -> set[NodeId]:
    """Nodes inside ``functions`` (and state declarations) defining any of ``names``."""
    roots = {n.split(".", 1)[0].split("[", 1)[0] for n in names}
    fset = set(functions)
    out: set[NodeId] = set()
    for n, defs in graph.defs.items():
        if not defs & roots:
            continue
        if graph.kind.get(n) == "state" or graph.function_of.get(n) in fset:
            out.add(n)
    return out


@dataclass
class AnalysisContext:
    """Everything the detectors may consult for one sink."""

    unit: AstUnit
    graph: Ipdg
    site: SinkSite
    slice: Slice
    taint: TaintState = field(default_factory=TaintState)
    sanitizers: Mapping[SrvType, frozenset[str]] = field(default_factory=dict)
    key_vars: frozenset[str] = frozenset()
    config: DetectorConfig = field(default_factory=DetectorConfig)

    @property
    def sink(self) -> NodeId:
        return self.slice.sink

    @property
    def function(self) -> str:
        return self.slice.sink_function

    @cached_property
    def exclude(self) -> frozenset[str]:
        return non_variable_names(self.unit)

    @cached_property
    def call_id(self) -> NodeId:
        return self.site.instances[0][0] if self.site.instances else self.site.id

    def arg(self, name: str) -> Optional[Expr]:
        ref = getattr(self.site, name)
        if ref is None:
            return None
        if self.site.kind is SinkKind.ASSEMBLY:
            return None
        if self.call_id != self.site.id:
            # inlined modifier copies carry fresh ids
            call = find_expr(self.graph, self.sink, self.call_id)
            for x in walk(call) if call is not None else ():
                if self.unit.clone_origin.get(x.id) == ref.node:
                    return x
        return find_expr(self.graph, self.sink, ref.node)

    @cached_property
    def consumers(self) -> set[NodeId]:
        """Nodes the sink call hands its arguments to."""
        u = unknown_node(self.call_id)
        if u in self.graph.nodes:
            return {u}
        call = find_expr(self.graph, self.sink, self.call_id)
        out: set[NodeId] = set()
        if isinstance(call, Call):
            for q in self.graph.callees.get(self.sink, ()):
                f = self.graph.functions.get(q)
                if f is not None and f.name == callee_name(call):
                    out.update(self.graph.params.get(q, ()))
        return out

    def sources_of(self, name: str) -> set[NodeId]:
        return expr_sources(self.graph, self.sink, self.arg(name), self.exclude, self.consumers)

    @cached_property
    def hash_sources(self) -> set[NodeId]:
        if self.site.kind is SinkKind.ASSEMBLY:
            return set(self.graph.predecessors(self.sink, DATA))
        return self.sources_of("hash_arg")

    @cached_property
    def hash_closure(self) -> set[NodeId]:
        return dependencies(self.graph, self.hash_sources, "backward", DATA)

    @cached_property
    def hash_names(self) -> set[str]:
        return node_names(self.graph, self.hash_closure)

    @cached_property
    def sink_closure(self) -> set[NodeId]:
        return dependencies(self.graph, {self.sink}, "backward", DATA)

    def hash_evidence(self) -> set[NodeId]:
        fset = self.slice.function_set
        return {
            n for n in self.hash_closure
            if self.graph.kind.get(n) in ("stmt", "state")
            and (self.graph.function_of.get(n) in fset or self.graph.kind.get(n) == "state")
        }

    def sanitized(self, t: SrvType) -> frozenset[str]:
        return frozenset(self.sanitizers.get(t, frozenset()))

    def sanitized_in_hash(self, t: SrvType) -> bool:
        return any(name_matches(s, self.hash_names) for s in self.sanitized(t))

    @cached_property
    def warning_nodes(self) -> set[NodeId]:
        names = set(self.key_vars)
        for t in SrvType:
            names |= self.sanitized(t)
        seeds = defs_of(self.graph, names, self.slice.functions) | {self.sink}
        return collect_warning_nodes(self.graph, seeds)

    def filter_evidence(self, nodes: Iterable[NodeId]) -> set[NodeId]:
        keep = self.warning_nodes | {self.sink}
        return {n for n in nodes if n in keep}

    @cached_property
    def slice_functions(self) -> list[FunctionDef]:
        return [self.graph.functions[q] for q in self.slice.functions if q in self.graph.functions]

    @cached_property
    def signer_vars(self) -> set[str]:
        return signer_vars(self)

    def unknown_call_names(self, nodes: Iterable[NodeId]) -> set[str]:
        out: set[str] = set()
        for n in nodes:
            if self.graph.kind.get(n) == "unknown":
                call = self.graph.stmt.get(n)
                if isinstance(call, Call):
                    out.add(callee_name(call))
        return out

    def internal_call_names(self, nodes: Iterable[NodeId]) -> set[str]:
        out: set[str] = set()
        for n in nodes:
            for q in self.graph.callees.get(n, ()):
                fn = self.graph.functions.get(q)
                if fn is not None:
                    out.add(fn.name)
        return out


def recovering_functions(ctx: AnalysisContext) -> set[str]:
    """Short names of functions whose return value is the recovered signer."""
    g = ctx.graph
    found: set[str] = set()
    stmt = g.stmt.get(ctx.sink)
    if isinstance(stmt, Return):
        found.add(g.functions[ctx.function].name if ctx.function in g.functions else "")
    changed = True
    while changed:
        changed = False
        for fn in ctx.slice_functions:
            if fn.name in found or fn.body is None:
                continue
            for n in walk(fn.body):
                if isinstance(n, Return) and n.value is not None and _calls_any(n.value, found):
                    found.add(fn.name)
                    changed = True
                    break
    found.discard("")
    return found


def _calls_any(e: Expr, names: set[str]) -> bool:
    return any(isinstance(x, Call) and callee_name(x) in names for x in walk(e))


def signer_vars(ctx: AnalysisContext) -> set[str]:
    """Variables holding, or compared with, the recovered address."""
    g = ctx.graph
    out = set(g.defs.get(ctx.sink, set()))
    recovering = recovering_functions(ctx)

    def is_recovery(e: Expr) -> bool:
        return any(x.id == ctx.call_id for x in walk(e)) or _calls_any(e, recovering)

    for fn in ctx.slice_functions:
        if fn.body is None:
            continue
        for n in walk(fn.body):
            if isinstance(n, VarDecl) and n.value is not None and is_recovery(n.value):
                out.update(d.name for d in n.decls if d is not None)
            elif isinstance(n, Assign) and is_recovery(n.value):
                out |= {root_var(n.target)} - {None}
    for fn in ctx.slice_functions:
        if fn.body is None:
            continue
        for n in walk(fn.body):
            if isinstance(n, Binary) and n.op in ("==", "!="):
                for a, b in ((n.left, n.right), (n.right, n.left)):
                    if is_recovery(a) or free_vars(a, ctx.exclude) & out and _is_var(a):
                        out |= free_vars(b, ctx.exclude)
    return out - ENV_ATOMS


def _is_var(e: Expr) -> bool:
    return isinstance(e, Ident)


def keyed_reads(e: Expr) -> list[tuple[str, Expr]]:
    return [
        (root_var(n), n.index) for n in walk(e)
        if isinstance(n, Index) and n.index is not None and root_var(n) is not None
    ]


def mapping_names(graph: Ipdg, unit: AstUnit) -> set[str]:
    out: set[str] = set()
    for c in unit.contracts:
        for sv in c.state_vars:
            if sv.type_name.is_mapping:
                out.add(sv.name)
    return out & set(graph.state_vars)
