"""Function-granularity slices around a signature sink, rendered as source text."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .frontend.ast import AstUnit, ContractDef, NodeId
from .frontend.sinks import SinkSite
from .graph import EdgeKind, Ipdg, dependencies

DEFAULT_BUDGET = 120_000


class BudgetExceeded(Exception):
    def __init__(self, sink: NodeId, size: int, budget: int):
        super().__init__(f"slice for sink {sink} needs {size} characters, budget is {budget}")
        self.sink, self.size, self.budget = sink, size, budget


@dataclass
class Slice:
    sink: NodeId
    sink_function: str
    functions: list[str]
    state_vars: list[str]
    text: str = ""
    omitted: list[str] = field(default_factory=list)

    @property
    def function_set(self) -> frozenset[str]:
        return frozenset(self.functions)


def sink_node(graph: Ipdg, site: SinkSite) -> NodeId:
    node_id, _ = site.instances[0] if site.instances else (site.id, site.enclosing_function)
    n = graph.owner_statement(node_id)
    if n is None:
        raise KeyError(f"sink {node_id} is not inside an analysed statement")
    return n


def call_graph(graph: Ipdg) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {q: set() for q in graph.functions}
    for site, targets in graph.callees.items():
        caller = graph.function_of.get(site)
        if caller is None:
            continue
        out.setdefault(caller, set()).update(t for t in targets if t in graph.functions)
    return out


def callers_of(graph: Ipdg) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {q: set() for q in graph.functions}
    for caller, targets in call_graph(graph).items():
        for t in targets:
            out[t].add(caller)
    return out


def _touched_state(graph: Ipdg, functions: Iterable[str], extra: Iterable[NodeId] = ()) -> list[str]:
    fset = set(functions)
    names: set[str] = set()
    for n, f in graph.function_of.items():
        if f in fset:
            names |= graph.uses.get(n, set()) | graph.defs.get(n, set())
    for n in extra:
        if graph.kind.get(n) == "state":
            names |= graph.defs.get(n, set())
    return sorted(x for x in names if x in graph.state_vars)


def initial_code_block(graph: Ipdg, unit: AstUnit, sink: SinkSite, budget: int = DEFAULT_BUDGET) -> Slice:
    """The sink's function, its transitive callers, every function reached
    backward over Data edges from the sink or from those callers' call sites,
    and the state declarations they touch.

    Call edges are not walked backward from arbitrary entries: that would pull
    in every other caller of a shared helper.
    """
    start = sink_node(graph, sink)
    sink_fn = graph.function_of[start]
    up = _transitive(callers_of(graph), sink_fn)
    chain = up | {sink_fn}
    seeds = {start} | {
        n for n, targets in graph.callees.items()
        if graph.function_of.get(n) in up and targets & chain
    }
    closure = dependencies(graph, seeds, "backward", (EdgeKind.DATA,))
    functions = {graph.function_of[n] for n in closure if n in graph.function_of} | chain
    functions = {f for f in functions if f in graph.functions}
    state = _touched_state(graph, functions, closure)
    sl = Slice(start, sink_fn, _ordered(unit, functions), state)
    return render(sl, graph, unit, budget)


def _transitive(edges: dict[str, set[str]], f: str) -> set[str]:
    seen: set[str] = set()
    queue = deque([f])
    while queue:
        x = queue.popleft()
        for y in edges.get(x, ()):
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def function_level_slice(
    graph: Ipdg, unit: AstUnit, key_vars: Iterable[str], seed: Slice, budget: int = DEFAULT_BUDGET
) -> Slice:
    """Add every function that reads a key variable, and every function a key
    name calls into (a key variable that is really a helper call)."""
    keys = set(key_vars)
    if not keys:
        return seed
    added: set[str] = set()
    by_name: dict[str, list[str]] = {}
    reads: dict[str, set[str]] = {}
    for n, q in graph.function_of.items():
        reads.setdefault(q, set()).update(graph.uses.get(n, ()))
    for q, fn in graph.functions.items():
        by_name.setdefault(fn.name, []).append(q)
        if keys & reads.get(q, set()):
            added.add(q)
    cg = call_graph(graph)
    for k in keys:
        for q in by_name.get(k, ()):
            added.add(q)
            added |= _transitive(cg, q)
    functions = set(seed.functions) | added
    if functions == set(seed.functions):
        return seed
    state = sorted(set(seed.state_vars) | set(_touched_state(graph, added)))
    sl = Slice(seed.sink, seed.sink_function, _ordered(unit, functions), state)
    return render(sl, graph, unit, budget)


def _ordered(unit: AstUnit, functions: Iterable[str]) -> list[str]:
    pos: dict[str, tuple[int, int]] = {}
    for c in unit.contracts:
        for fn in c.functions:
            sp = unit.node_index.get(fn.id)
            pos[fn.qualified_name] = (sp.start if sp else 0, fn.id)
    for fn in unit.free_functions:
        sp = unit.node_index.get(fn.id)
        pos[fn.qualified_name] = (sp.start if sp else 0, fn.id)
    return sorted(set(functions), key=lambda q: pos.get(q, (0, 0)))


# ---------------------------------------------------------------- rendering


def distances(graph: Ipdg, sink_fn: str) -> dict[str, int]:
    """Undirected call-graph distance from the sink's function."""
    adj: dict[str, set[str]] = {}
    for a, targets in call_graph(graph).items():
        for b in targets:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
    dist = {sink_fn: 0}
    queue = deque([sink_fn])
    while queue:
        x = queue.popleft()
        for y in sorted(adj.get(x, ())):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def render(sl: Slice, graph: Ipdg, unit: AstUnit, budget: int = DEFAULT_BUDGET) -> Slice:
    """Fill ``sl.text``; functions farthest from the sink are dropped first
    when the text would exceed ``budget``."""
    keep = list(sl.functions)
    omitted: list[str] = []
    dist = distances(graph, sl.sink_function)
    text = _render_text(unit, graph, keep, sl.state_vars)
    while len(text) > budget:
        droppable = [q for q in keep if q != sl.sink_function]
        if not droppable:
            raise BudgetExceeded(sl.sink, len(text), budget)
        far = max(droppable, key=lambda q: (dist.get(q, 1 << 30), q))
        keep.remove(far)
        omitted.append(far)
        text = _render_text(unit, graph, keep, sl.state_vars)
    return Slice(sl.sink, sl.sink_function, keep, sl.state_vars, text, sl.omitted + omitted)


def _render_text(unit: AstUnit, graph: Ipdg, functions: list[str], state_vars: list[str]) -> str:
    fset = set(functions)
    sset = set(state_vars)
    parts: list[str] = []
    for fn in unit.free_functions:
        if fn.qualified_name in fset:
            parts.append(unit.span_text(fn.id))
    for c in unit.contracts:
        members = _contract_members(unit, c, fset, sset)
        if not members:
            continue
        parts.append(_header(unit, c) + "\n" + "\n\n".join("    " + m for m in members) + "\n}")
    return "\n\n".join(parts) + "\n"


def _contract_members(unit: AstUnit, c: ContractDef, fset: set[str], sset: set[str]) -> list[str]:
    fns = [f for f in c.functions if f.qualified_name in fset]
    svs = [sv for sv in c.state_vars if sv.name in sset]
    if not fns and not svs:
        return []
    used_mods = {m.name for f in fns for m in f.modifiers}
    items: list[tuple[int, str]] = []

    def add(node_id: NodeId, suffix: str = "") -> None:
        sp = unit.node_index.get(node_id)
        if sp is not None:
            items.append((sp.start, unit.source[sp.start:sp.end] + suffix))

    for s in c.structs:
        add(s.id)
    for sv in svs:
        add(sv.id, ";" if not unit.span_text(sv.id).rstrip().endswith(";") else "")
    for m in c.modifiers:
        if m.name in used_mods:
            add(m.id)
    for f in fns:
        add(f.id)
    return [t for _, t in sorted(items)]


def _header(unit: AstUnit, c: ContractDef) -> str:
    sp = unit.node_index.get(c.id)
    if sp is None:
        return f"contract {c.name} {{"
    text = unit.source[sp.start:sp.end]
    brace = text.find("{")
    return (text[: brace + 1] if brace >= 0 else f"contract {c.name} {{").strip()


def slice_for(graph: Ipdg, unit: AstUnit, sink: SinkSite, key_vars: Optional[Iterable[str]] = None,
              budget: int = DEFAULT_BUDGET) -> Slice:
    seed = initial_code_block(graph, unit, sink, budget)
    if key_vars is None:
        return seed
    return function_level_slice(graph, unit, key_vars, seed, budget)
