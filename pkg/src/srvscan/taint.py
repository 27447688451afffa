"""Label propagation over the dependency graph and warning-node collection."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .frontend.ast import ENV_ATOMS, FunctionDef, NodeId, Opaque
from .graph import EdgeKind, Ipdg, atom_node, dependencies, unknown_node


class SrvType(Enum):
    XCRA = "X-CRA"
    XPRA = "X-PRA"
    CASR = "CASR"
    SSMI = "SSMI"
    SMA = "SMA"

    @classmethod
    def parse(cls, text: str) -> "SrvType":
        norm = text.strip().upper().replace("_", "-")
        for t in cls:
            if t.value == norm or t.value.replace("-", "") == norm.replace("-", ""):
                return t
        raise ValueError(f"unknown SRV type: {text!r}")


TAINT_KINDS = frozenset({EdgeKind.DATA, EdgeKind.CONTROL})


@dataclass
class TaintState:
    tainted: dict[NodeId, set[str]] = field(default_factory=dict)
    sanitized_cuts: set[tuple[NodeId, SrvType]] = field(default_factory=set)

    def labels(self, node: NodeId) -> set[str]:
        return self.tainted.get(node, set())

    def is_tainted(self, node: NodeId, source: Optional[str] = None) -> bool:
        labels = self.tainted.get(node)
        if not labels:
            return False
        return source is None or source in labels


@dataclass(frozen=True)
class Warning:
    function: str
    srv_type: SrvType
    evidence: frozenset[NodeId]
    confidence: str
    sink: NodeId = 0
    notes: tuple[str, ...] = ()


def source_nodes(graph: Ipdg, source: str) -> set[NodeId]:
    """Graph nodes where a source label originates.

    Labels: an environment atom, ``ext:<call id>`` for an unresolved call's
    return value, ``param:<Contract.function>.<name>`` for a parameter.
    """
    if source in ENV_ATOMS:
        return {atom_node(source)}
    if source.startswith("ext:"):
        n = unknown_node(int(source[4:]))
        return {n} if n in graph.nodes else set()
    if source.startswith("param:"):
        qname, _, pname = source[6:].rpartition(".")
        fn = graph.functions.get(qname)
        if fn is None:
            return set()
        return {p.id for p in fn.params if p.name == pname}
    return set()


def default_sources(graph: Ipdg) -> set[str]:
    """Attacker-influenced values: environment atoms, unknown-call returns, and
    parameters of public/external functions."""
    out = set(ENV_ATOMS)
    for n, kind in graph.kind.items():
        if kind == "unknown":
            out.add(f"ext:{-n - 100}")
    for qname, fn in graph.functions.items():
        if fn.is_entry:
            for p in fn.params:
                if p.name:
                    out.add(f"param:{qname}.{p.name}")
    return out


def propagate(
    graph: Ipdg,
    sources: Iterable[str],
    cuts: Optional[Mapping[SrvType, Iterable[NodeId]]] = None,
    srv_type: Optional[SrvType] = None,
    kinds: Iterable[EdgeKind] = TAINT_KINDS,
    extra_origins: Optional[Mapping[str, Iterable[NodeId]]] = None,
) -> TaintState:
    """Least fixpoint of forward label propagation.

    Cut nodes for ``srv_type`` (all types when ``srv_type`` is None) neither
    receive nor pass on labels.
    """
    cuts = cuts or {}
    cut_nodes: set[NodeId] = set()
    state = TaintState()
    for t, nodes in cuts.items():
        if srv_type is None or t is srv_type:
            for n in nodes:
                cut_nodes.add(n)
                state.sanitized_cuts.add((n, t))
    ks = frozenset(kinds)
    for src in sorted(set(sources)):
        origins = set(source_nodes(graph, src))
        if extra_origins and src in extra_origins:
            origins |= set(extra_origins[src])
        queue = deque(sorted(o for o in origins if o not in cut_nodes))
        seen = set(queue)
        while queue:
            n = queue.popleft()
            state.tainted.setdefault(n, set()).add(src)
            for m in graph.successors(n, ks):
                if m not in seen and m not in cut_nodes:
                    seen.add(m)
                    queue.append(m)
    return state


def collect_warning_nodes(graph: Ipdg, sanitized_defs: Iterable[NodeId]) -> set[NodeId]:
    """Every node reachable forward over Data and Control edges from the given
    definitions (the definitions included)."""
    start = {n for n in sanitized_defs if n in graph.nodes}
    if not start:
        return set()
    return dependencies(graph, start, "forward", TAINT_KINDS)


def is_opaque(graph: Ipdg, node: NodeId) -> bool:
    return isinstance(graph.stmt.get(node), Opaque)


def make_warning(
    graph: Ipdg,
    function: str,
    srv_type: SrvType,
    evidence: Iterable[NodeId],
    sink: NodeId,
    notes: Iterable[str] = (),
) -> Warning:
    ev = frozenset(evidence) | {sink}
    confidence = "low" if any(is_opaque(graph, n) for n in ev) else "high"
    return Warning(function, srv_type, ev, confidence, sink, tuple(notes))


def public_params(fn: FunctionDef) -> list[str]:
    return [p.name for p in fn.params if p.name] if fn.is_entry else []
