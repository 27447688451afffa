"""Inter-contract program dependency graph.

Nodes are statements, function parameters, state-variable declarations,
function entries, plus two kinds of synthetic nodes with negative ids:

* one node per environment atom (``block.chainid`` ...), feeding every
  statement that reads it, and
* one node per unresolved external call site, whose output stands for the
  unknown return value.

Locals use flow-sensitive reaching definitions over the structured AST; state
variables are global (every definition reaches every use).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .frontend.ast import (
    ENV_ATOMS,
    Assign,
    AstUnit,
    Block,
    Break,
    Call,
    ContractDef,
    Continue,
    DoWhile,
    ElementaryTypeExpr,
    Emit,
    Expr,
    ExprStmt,
    For,
    FunctionDef,
    Ident,
    If,
    Index,
    IndexRange,
    InlinedModifier,
    Literal,
    Member,
    NewExpr,
    Node,
    NodeId,
    Opaque,
    Placeholder,
    Return,
    RevertStmt,
    Stmt,
    Try,
    TupleExpr,
    TypeExpr,
    Unary,
    VarDecl,
    While,
    atom_of,
    children,
    free_vars,
    walk,
)
from .frontend.sinks import non_variable_names


class EdgeKind(Enum):
    DATA = "Data"
    CONTROL = "Control"
    CALL = "Call"


ALL_KINDS = frozenset(EdgeKind)

_ATOM_ORDER = sorted(ENV_ATOMS)
_UNKNOWN_BASE = 100


def atom_node(atom: str) -> NodeId:
    return -1 - _ATOM_ORDER.index(atom)


def unknown_node(call_id: NodeId) -> NodeId:
    return -(_UNKNOWN_BASE + call_id)


def node_atom(node: NodeId) -> Optional[str]:
    if -len(_ATOM_ORDER) <= node <= -1:
        return _ATOM_ORDER[-node - 1]
    return None


# member calls that are language builtins rather than function calls
_BUILTIN_METHODS = {
    "push", "pop", "encode", "encodePacked", "encodeWithSelector", "encodeWithSignature",
    "encodeCall", "decode", "concat", "selector", "length",
}
_EXTERNAL_METHODS = {"call", "delegatecall", "staticcall", "transfer", "send"}
_BUILTIN_CALLEES = {
    "keccak256", "sha256", "sha3", "ripemd160", "ecrecover", "require", "assert", "revert",
    "addmod", "mulmod", "selfdestruct", "gasleft", "blockhash", "type", "payable",
}


@dataclass
class Ipdg:
    nodes: set[NodeId] = field(default_factory=set)
    edges: set[tuple[NodeId, NodeId, EdgeKind]] = field(default_factory=set)
    entry_points: dict[str, NodeId] = field(default_factory=dict)
    # node -> "stmt" | "param" | "state" | "entry" | "atom" | "unknown"
    kind: dict[NodeId, str] = field(default_factory=dict)
    function_of: dict[NodeId, str] = field(default_factory=dict)
    stmt: dict[NodeId, Node] = field(default_factory=dict)
    uses: dict[NodeId, set[str]] = field(default_factory=dict)
    defs: dict[NodeId, set[str]] = field(default_factory=dict)
    atoms: dict[NodeId, set[str]] = field(default_factory=dict)
    data_labels: dict[tuple[NodeId, NodeId], set[str]] = field(default_factory=dict)
    # mapping writes: node -> [(mapping name, key expression)]
    key_writes: dict[NodeId, list[tuple[str, Expr]]] = field(default_factory=dict)
    guards: set[NodeId] = field(default_factory=set)
    state_vars: dict[str, NodeId] = field(default_factory=dict)
    functions: dict[str, FunctionDef] = field(default_factory=dict)
    # pre-order position of statement nodes inside their function
    order: dict[NodeId, int] = field(default_factory=dict)
    # call site node -> callee qualified names (internal) / unknown node ids
    callees: dict[NodeId, set[str]] = field(default_factory=dict)
    # qualified function -> its return-value source nodes
    returns: dict[str, set[NodeId]] = field(default_factory=dict)
    params: dict[str, list[NodeId]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._succ: Optional[dict[NodeId, list[tuple[NodeId, EdgeKind]]]] = None
        self._pred: Optional[dict[NodeId, list[tuple[NodeId, EdgeKind]]]] = None
        self._owner: Optional[dict[NodeId, NodeId]] = None

    def _index(self) -> None:
        succ: dict[NodeId, list[tuple[NodeId, EdgeKind]]] = {}
        pred: dict[NodeId, list[tuple[NodeId, EdgeKind]]] = {}
        for a, b, k in sorted(self.edges, key=_edge_key):
            succ.setdefault(a, []).append((b, k))
            pred.setdefault(b, []).append((a, k))
        self._succ, self._pred = succ, pred

    def successors(self, n: NodeId, kinds: Iterable[EdgeKind] = ALL_KINDS) -> list[NodeId]:
        if self._succ is None:
            self._index()
        ks = set(kinds)
        return [b for b, k in self._succ.get(n, ()) if k in ks]

    def predecessors(self, n: NodeId, kinds: Iterable[EdgeKind] = ALL_KINDS) -> list[NodeId]:
        if self._pred is None:
            self._index()
        ks = set(kinds)
        return [a for a, k in self._pred.get(n, ()) if k in ks]

    def function_nodes(self, qname: str) -> list[NodeId]:
        return sorted((n for n, f in self.function_of.items() if f == qname), key=lambda n: self.order.get(n, -1))

    def owner_statement(self, expr_id: NodeId) -> Optional[NodeId]:
        """Graph node whose own expressions contain ``expr_id``."""
        if self._owner is None:
            owner: dict[NodeId, NodeId] = {}
            for n, s in self.stmt.items():
                if self.kind.get(n) != "stmt":
                    continue
                owner[n] = n
                for e in stmt_exprs(s):
                    for x in walk(e):
                        owner.setdefault(x.id, n)
            self._owner = owner
        return self._owner.get(expr_id)

    def canonical_edges(self) -> list[tuple[NodeId, NodeId, str]]:
        return [(a, b, k.value) for a, b, k in sorted(self.edges, key=_edge_key)]


def _edge_key(e: tuple[NodeId, NodeId, EdgeKind]) -> tuple[NodeId, NodeId, str]:
    return (e[0], e[1], e[2].value)


def dependencies(
    graph: Ipdg, start: Iterable[NodeId], direction: str = "backward", kinds: Iterable[EdgeKind] = ALL_KINDS
) -> set[NodeId]:
    """Transitive closure from ``start`` along ``kinds`` edges; includes ``start``."""
    ks = frozenset(kinds)
    step = graph.predecessors if direction == "backward" else graph.successors
    seen = set(start)
    queue = deque(seen)
    while queue:
        n = queue.popleft()
        for m in step(n, ks):
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


# ---------------------------------------------------------------- expression analysis


def root_var(e: Expr) -> Optional[str]:
    while isinstance(e, (Index, IndexRange, Member)):
        e = e.base
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, TupleExpr) and len(e.items) == 1 and e.items[0] is not None:
        return root_var(e.items[0])
    return None


def is_require(stmt: Node) -> bool:
    return (
        isinstance(stmt, ExprStmt)
        and isinstance(stmt.expr, Call)
        and isinstance(stmt.expr.callee, Ident)
        and stmt.expr.callee.name in ("require", "assert")
    )


def always_exits(s: Optional[Stmt]) -> bool:
    """True if executing ``s`` never falls through (return / revert)."""
    if s is None:
        return False
    if isinstance(s, (Return, RevertStmt)):
        return True
    if isinstance(s, ExprStmt) and isinstance(s.expr, Call) and isinstance(s.expr.callee, Ident):
        return s.expr.callee.name == "revert"
    if isinstance(s, Block):
        return any(always_exits(x) for x in s.stmts)
    if isinstance(s, If):
        return always_exits(s.then) and always_exits(s.orelse)
    return False


@dataclass
class _Writes:
    strong: list[str] = field(default_factory=list)
    weak: list[str] = field(default_factory=list)
    keyed: list[tuple[str, Expr]] = field(default_factory=list)


def written_vars(e: Optional[Expr]) -> _Writes:
    out = _Writes()
    if e is None:
        return out
    for n in walk(e):
        if isinstance(n, Assign):
            _target(n.target, n.op == "=", out)
        elif isinstance(n, Unary) and n.op in ("++", "--", "delete"):
            _target(n.operand, False, out)
    return out


def _target(t: Expr, plain: bool, out: _Writes) -> None:
    if isinstance(t, TupleExpr):
        for item in t.items:
            if item is not None:
                _target(item, plain, out)
        return
    if isinstance(t, Ident):
        (out.strong if plain else out.weak).append(t.name)
        return
    name = root_var(t)
    if name is None:
        return
    out.weak.append(name)
    if isinstance(t, Index) and t.index is not None:
        out.keyed.append((name, t.index))
    elif isinstance(t, Member) and isinstance(t.base, Index) and t.base.index is not None:
        out.keyed.append((name, t.base.index))


def read_vars(e: Optional[Expr], exclude: frozenset[str]) -> set[str]:
    """Free variables read by ``e``; plain assignment targets are not reads."""
    out: set[str] = set()
    if e is None:
        return out
    _reads(e, exclude, out)
    return out


def _reads(e: Node, exclude: frozenset[str], out: set[str]) -> None:
    if isinstance(e, Assign):
        t = e.target
        if e.op != "=":
            out |= free_vars(t, exclude)
        else:
            _target_reads(t, exclude, out)
        _reads(e.value, exclude, out)
        return
    if isinstance(e, Call):
        # arguments and receivers only; callee names are not variables
        callee = e.callee
        if isinstance(callee, Member):
            _reads(callee.base, exclude, out)
        elif isinstance(callee, Call):
            _reads(callee, exclude, out)
        for a in e.args:
            _reads(a, exclude, out)
        for o in e.options.values():
            _reads(o, exclude, out)
        return
    if isinstance(e, (Ident, Member)) or atom_of(e) is not None:
        out |= free_vars(e, exclude)
        return
    for c in children(e):
        _reads(c, exclude, out)


def _target_reads(t: Expr, exclude: frozenset[str], out: set[str]) -> None:
    if isinstance(t, TupleExpr):
        for item in t.items:
            if item is not None:
                _target_reads(item, exclude, out)
    elif isinstance(t, Index):
        _target_reads(t.base, exclude, out) if not isinstance(t.base, Ident) else None
        if t.index is not None:
            _reads(t.index, exclude, out)
    elif isinstance(t, Member):
        if not isinstance(t.base, Ident):
            _target_reads(t.base, exclude, out)


def stmt_exprs(s: Node) -> list[Expr]:
    """Expressions evaluated by the graph node of statement ``s``."""
    if isinstance(s, VarDecl):
        return [s.value] if s.value is not None else []
    if isinstance(s, ExprStmt):
        return [s.expr]
    if isinstance(s, (If, While, DoWhile)):
        return [s.cond]
    if isinstance(s, For):
        return [s.cond] if s.cond is not None else []
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, (Emit, RevertStmt)):
        call = s.call
        return list(call.args) if isinstance(call, Call) else [call]
    if isinstance(s, Try):
        return [s.expr]
    if isinstance(s, Expr):
        return [s]
    return []


# ---------------------------------------------------------------- builder


class _Builder:
    def __init__(self, unit: AstUnit):
        self.unit = unit
        self.g = Ipdg()
        self.exclude = non_variable_names(unit)
        self.contracts = {c.name: c for c in unit.contracts}
        self.type_names: set[str] = set()
        for c in unit.contracts:
            self.type_names.add(c.name)
            self.type_names.update(s.name for s in c.structs)
            self.type_names.update(e.name for e in c.events)
            self.type_names.update(e.name for e in c.errors)
            self.type_names.update(e.name for e in c.enums)
        self.state_names: set[str] = set()
        self.state_types: dict[str, str] = {}
        self.state_defs: dict[str, set[NodeId]] = {}
        self.fn_owner: dict[int, ContractDef] = {}
        # qualified name -> (params, local names, var types)
        self.fn_scope: dict[str, set[str]] = {}
        self.var_types: dict[str, dict[str, str]] = {}
        self.pending_state_uses: list[tuple[NodeId, str]] = []

    # -- helpers

    def add_node(self, n: NodeId, kind: str, fn: str = "", stmt: Optional[Node] = None) -> None:
        self.g.nodes.add(n)
        self.g.kind.setdefault(n, kind)
        if fn:
            self.g.function_of[n] = fn
        if stmt is not None:
            self.g.stmt[n] = stmt

    def edge(self, a: NodeId, b: NodeId, kind: EdgeKind, label: str = "") -> None:
        if a == b:
            return
        self.g.edges.add((a, b, kind))
        if kind is EdgeKind.DATA and label:
            self.g.data_labels.setdefault((a, b), set()).add(label)

    def functions(self) -> list[tuple[Optional[ContractDef], FunctionDef]]:
        out: list[tuple[Optional[ContractDef], FunctionDef]] = []
        for c in self.unit.contracts:
            for fn in c.functions:
                if fn.body is not None:
                    out.append((c, fn))
        for fn in self.unit.free_functions:
            if fn.body is not None:
                out.append((None, fn))
        return out

    # -- build

    def build(self) -> Ipdg:
        g = self.g
        for i, atom in enumerate(_ATOM_ORDER):
            self.add_node(atom_node(atom), "atom")
        for c in self.unit.contracts:
            for sv in c.state_vars:
                self.add_node(sv.id, "state", stmt=sv)
                g.state_vars[sv.name] = sv.id
                self.state_names.add(sv.name)
                self.state_types[sv.name] = sv.type_name.text()
                self.state_defs.setdefault(sv.name, set()).add(sv.id)
        fns = self.functions()
        for c, fn in fns:
            q = fn.qualified_name
            g.functions[q] = fn
            if c is not None:
                self.fn_owner[fn.id] = c
            self.add_node(fn.id, "entry", q, fn)
            g.entry_points[q] = fn.id
            scope: set[str] = set()
            types: dict[str, str] = {}
            plist: list[NodeId] = []
            for p in fn.params + fn.returns:
                if p.name:
                    scope.add(p.name)
                    types[p.name] = p.type_name.text()
            for p in fn.params:
                self.add_node(p.id, "param", q, p)
                g.defs[p.id] = {p.name} if p.name else set()
                plist.append(p.id)
            for p in fn.returns:
                self.add_node(p.id, "param", q, p)
                g.defs[p.id] = {p.name} if p.name else set()
            for n in walk(fn.body):
                if isinstance(n, VarDecl):
                    for d in n.decls:
                        if d is not None:
                            scope.add(d.name)
                            if d.type_name is not None:
                                types[d.name] = d.type_name.text()
            self.fn_scope[q] = scope
            self.var_types[q] = types
            g.params[q] = plist
        # first pass: collect state defs and return sources, so calls and
        # state uses can be wired in the second pass
        for c, fn in fns:
            self._scan_function(fn)
        for c in self.unit.contracts:
            for sv in c.state_vars:
                g.defs[sv.id] = {sv.name}
                if sv.value is not None:
                    self._wire_expr(sv.value, sv.id, None, {}, "", sv.contract)
        for c, fn in fns:
            self._function(fn)
        for n, name in self.pending_state_uses:
            for d in self.state_defs.get(name, ()):
                self.edge(d, n, EdgeKind.DATA, name)
        return g

    def _scan_function(self, fn: FunctionDef) -> None:
        q = fn.qualified_name
        rets: set[NodeId] = set()
        named = {p.name for p in fn.returns if p.name}
        for p in fn.returns:
            if p.name:
                rets.add(p.id)
        order = 0
        for n in walk(fn.body):
            if isinstance(n, Stmt) and not isinstance(n, Block):
                self.g.order[n.id] = order
                order += 1
            if isinstance(n, Return):
                rets.add(n.id)
            writes = self._node_writes(n)
            owner = n
            if isinstance(n, For) and n.post is not None:
                writes, owner = written_vars(n.post), n.post
            for name in writes.strong + writes.weak:
                if name in named:
                    rets.add(n.id)
                if name in self.state_names and name not in self.fn_scope[q]:
                    self.state_defs.setdefault(name, set()).add(owner.id)
        self.g.returns[q] = rets

    def _node_writes(self, n: Node) -> _Writes:
        if isinstance(n, VarDecl):
            w = written_vars(n.value)
            w.strong.extend(d.name for d in n.decls if d is not None)
            return w
        if isinstance(n, Opaque):
            return _Writes(strong=list(n.writes))
        if isinstance(n, Stmt) and not isinstance(n, (Block, InlinedModifier)):
            w = _Writes()
            for e in stmt_exprs(n):
                ww = written_vars(e)
                w.strong += ww.strong
                w.weak += ww.weak
                w.keyed += ww.keyed
            return w
        if isinstance(n, Expr) and n.id in self.g.order:
            return written_vars(n)
        return _Writes()

    # -- per function, reaching definitions

    def _function(self, fn: FunctionDef) -> None:
        q = fn.qualified_name
        state: dict[str, set[NodeId]] = {}
        for p in fn.params + fn.returns:
            if p.name:
                state[p.name] = {p.id}
        self._block_stmts(fn.body.stmts, state, q, fn, [])

    def _block_stmts(self, stmts: list[Stmt], state: Optional[dict], q: str, fn: FunctionDef, guards: list[NodeId]):
        guards = list(guards)
        for s in stmts:
            if state is None:
                # unreachable code after return/revert: analyse with empty state
                state = {}
            state = self._stmt(s, state, q, fn, guards)
            if is_require(s):
                guards.append(s.id)
            elif isinstance(s, If) and (always_exits(s.then) or always_exits(s.orelse)):
                guards.append(s.id)
        return state

    def _control(self, n: NodeId, guards: list[NodeId]) -> None:
        for gnode in guards:
            self.edge(gnode, n, EdgeKind.CONTROL)

    def _simple(self, s: Stmt, exprs: list[Expr], state: dict, q: str, fn: FunctionDef, guards: list[NodeId]) -> None:
        n = s.id
        self.add_node(n, "stmt", q, s)
        self._control(n, guards)
        uses: set[str] = set()
        atoms: set[str] = set()
        for e in exprs:
            for v in read_vars(e, self.exclude):
                (atoms if v in ENV_ATOMS else uses).add(v)
            self._wire_expr(e, n, state, self.fn_scope[q], q, fn.contract, fn)
        self.g.uses.setdefault(n, set()).update(uses)
        self.g.atoms.setdefault(n, set()).update(atoms)

    def _apply_writes(self, n: NodeId, w: _Writes, state: dict, q: str) -> None:
        scope = self.fn_scope[q]
        defs = self.g.defs.setdefault(n, set())
        for name in w.strong:
            defs.add(name)
            if name in scope:
                state[name] = {n}
        for name in w.weak:
            defs.add(name)
            if name in scope:
                state.setdefault(name, set()).add(n)
        if w.keyed:
            self.g.key_writes.setdefault(n, []).extend(w.keyed)

    def _stmt(self, s: Stmt, state: dict, q: str, fn: FunctionDef, guards: list[NodeId]) -> Optional[dict]:
        if isinstance(s, Block):
            return self._block_stmts(s.stmts, state, q, fn, guards)
        if isinstance(s, InlinedModifier):
            self.add_node(s.id, "stmt", q, s)
            self._control(s.id, guards)
            self.g.guards.add(s.id)
            for b in s.bindings:
                state = self._stmt(b, state, q, fn, guards) or {}
            return self._block_stmts(s.body.stmts, state, q, fn, guards + [s.id])
        if isinstance(s, If):
            self._simple(s, [s.cond], state, q, fn, guards)
            self.g.guards.add(s.id)
            inner = guards + [s.id]
            st_then = self._stmt(s.then, dict(_copy(state)), q, fn, inner)
            st_else = self._stmt(s.orelse, dict(_copy(state)), q, fn, inner) if s.orelse is not None else _copy(state)
            if always_exits(s.then):
                st_then = None
            if s.orelse is not None and always_exits(s.orelse):
                st_else = None
            return _merge(st_then, st_else)
        if isinstance(s, (While, For, DoWhile)):
            return self._loop(s, state, q, fn, guards)
        if isinstance(s, Try):
            self._simple(s, [s.expr], state, q, fn, guards)
            self.g.guards.add(s.id)
            inner = guards + [s.id]
            for p in s.returns:
                if p.name:
                    self.add_node(p.id, "param", q, p)
                    self.g.defs[p.id] = {p.name}
                    self.edge(s.id, p.id, EdgeKind.DATA, p.name)
                    state[p.name] = {p.id}
            outs = [self._stmt(s.body, _copy(state), q, fn, inner)]
            for cc in s.catches:
                st = _copy(state)
                for p in cc.params:
                    if p.name:
                        self.add_node(p.id, "param", q, p)
                        self.g.defs[p.id] = {p.name}
                        self.edge(s.id, p.id, EdgeKind.DATA, p.name)
                        st[p.name] = {p.id}
                outs.append(self._stmt(cc.body, st, q, fn, inner))
            merged: Optional[dict] = None
            for o in outs:
                merged = _merge(merged, o)
            return merged
        if isinstance(s, Opaque):
            n = s.id
            self.add_node(n, "stmt", q, s)
            self._control(n, guards)
            scope = self.fn_scope[q]
            uses = set(s.reads)
            self.g.uses[n] = uses
            self.g.atoms[n] = set(s.atoms)
            for v in uses:
                self._wire_var(v, n, state, scope)
            for a in s.atoms:
                self.edge(atom_node(a), n, EdgeKind.DATA, a)
            self._apply_writes(n, _Writes(strong=list(s.writes)), state, q)
            return state
        if isinstance(s, (Break, Continue, Placeholder)):
            self.add_node(s.id, "stmt", q, s)
            self._control(s.id, guards)
            return state
        exprs = stmt_exprs(s)
        self._simple(s, exprs, state, q, fn, guards)
        if is_require(s):
            self.g.guards.add(s.id)
        self._apply_writes(s.id, self._node_writes(s), state, q)
        if always_exits(s):
            return None
        return state

    def _loop(self, s: Stmt, state: dict, q: str, fn: FunctionDef, guards: list[NodeId]) -> dict:
        if isinstance(s, For) and s.init is not None:
            state = self._stmt(s.init, state, q, fn, guards) or state
        cond = s.cond if not isinstance(s, For) else s.cond
        head_state = _copy(state)
        for _ in range(3):
            self._simple(s, [cond] if cond is not None else [], head_state, q, fn, guards)
            self.g.guards.add(s.id)
            inner = guards + [s.id]
            body_state = self._stmt(s.body, _copy(head_state), q, fn, inner)
            if isinstance(s, For) and s.post is not None:
                post = s.post
                self.add_node(post.id, "stmt", q, post)
                self._control(post.id, inner)
                self.g.order.setdefault(post.id, self.g.order.get(s.id, 0))
                bs = body_state if body_state is not None else _copy(head_state)
                uses = read_vars(post, self.exclude)
                self.g.uses.setdefault(post.id, set()).update(uses - ENV_ATOMS)
                self._wire_expr(post, post.id, bs, self.fn_scope[q], q, fn.contract, fn)
                self._apply_writes(post.id, written_vars(post), bs, q)
                body_state = bs
            new_head = _merge(_copy(head_state), body_state)
            if new_head == head_state:
                break
            head_state = new_head
        return head_state

    # -- expression wiring

    def _wire_var(self, v: str, n: NodeId, state: Optional[dict], scope: set[str]) -> None:
        if v in ENV_ATOMS:
            self.edge(atom_node(v), n, EdgeKind.DATA, v)
        elif state is not None and v in scope:
            for d in state.get(v, ()):
                self.edge(d, n, EdgeKind.DATA, v)
        elif v in self.state_names:
            self.pending_state_uses.append((n, v))

    def _wire_expr(
        self,
        e: Expr,
        target: NodeId,
        state: Optional[dict],
        scope,
        q: str,
        contract: str,
        fn: Optional[FunctionDef] = None,
        site: Optional[NodeId] = None,
    ) -> None:
        """Add Data edges for every value ``e`` contributes to ``target``.

        ``site`` is the statement node owning the expression (for Call edges).
        """
        site = target if site is None else site
        scope = scope or set()
        if isinstance(e, Call):
            targets = self._resolve_call(e, q, contract, fn)
            if targets is not None:
                kind, fns, receiver = targets
                if kind == "builtin":
                    self._wire_children(e, target, state, scope, q, contract, fn, site)
                    return
                if kind == "internal":
                    args = ([receiver] if receiver is not None else []) + list(e.args)
                    for g_q in sorted(fns):
                        callee = self.g.functions[g_q]
                        self.edge(site, callee.id, EdgeKind.CALL)
                        self.g.callees.setdefault(site, set()).add(g_q)
                        for k, arg in enumerate(args):
                            if k < len(callee.params):
                                self._wire_expr(arg, callee.params[k].id, state, scope, q, contract, fn, site)
                        for r in self.g.returns.get(g_q, ()):
                            self.edge(r, target, EdgeKind.DATA, "return")
                    for o in e.options.values():
                        self._wire_expr(o, target, state, scope, q, contract, fn, site)
                    return
            # unresolved: synthetic unknown callee
            u = unknown_node(e.id)
            self.add_node(u, "unknown", q, e)
            self.edge(site, u, EdgeKind.CALL)
            self.g.callees.setdefault(site, set()).add(f"<unknown:{e.id}>")
            if isinstance(e.callee, Member):
                self._wire_expr(e.callee.base, u, state, scope, q, contract, fn, site)
            for a in list(e.args) + list(e.options.values()):
                self._wire_expr(a, u, state, scope, q, contract, fn, site)
            self.edge(u, target, EdgeKind.DATA, "return")
            return
        if isinstance(e, Assign):
            if e.op != "=":
                for v in free_vars(e.target, self.exclude):
                    self._wire_var(v, target, state, scope)
            else:
                tr: set[str] = set()
                _target_reads(e.target, self.exclude, tr)
                for v in tr:
                    self._wire_var(v, target, state, scope)
                for sub in _target_subcalls(e.target):
                    self._wire_expr(sub, target, state, scope, q, contract, fn, site)
            self._wire_expr(e.value, target, state, scope, q, contract, fn, site)
            return
        atom = atom_of(e)
        if atom is not None:
            self.edge(atom_node(atom), target, EdgeKind.DATA, atom)
            return
        if isinstance(e, Ident):
            if e.name not in self.exclude:
                for v in free_vars(e, self.exclude):
                    self._wire_var(v, target, state, scope)
            return
        self._wire_children(e, target, state, scope, q, contract, fn, site)

    def _wire_children(self, e, target, state, scope, q, contract, fn, site) -> None:
        if isinstance(e, Call):
            if isinstance(e.callee, Member):
                self._wire_expr(e.callee.base, target, state, scope, q, contract, fn, site)
            elif isinstance(e.callee, Call):
                self._wire_expr(e.callee, target, state, scope, q, contract, fn, site)
            for a in list(e.args) + list(e.options.values()):
                self._wire_expr(a, target, state, scope, q, contract, fn, site)
            return
        if isinstance(e, (Literal, ElementaryTypeExpr, TypeExpr, NewExpr)):
            return
        for c in children(e):
            if isinstance(c, Expr):
                self._wire_expr(c, target, state, scope, q, contract, fn, site)

    def _resolve_call(self, call: Call, q: str, contract: str, fn: Optional[FunctionDef]):
        """Classify a call as ("builtin", ...), ("internal", targets, receiver) or None (unknown)."""
        callee = call.callee
        if isinstance(callee, ElementaryTypeExpr) or isinstance(callee, (TypeExpr, NewExpr)):
            return "builtin", set(), None
        if isinstance(callee, Call):
            # e.g. type(x).max handled as Member; f()() is unknown
            return None
        if isinstance(callee, Ident):
            name = callee.name
            if name in _BUILTIN_CALLEES or name in self.type_names and name not in self._fn_names(contract):
                return "builtin", set(), None
            found = self._lookup_virtual(contract, name, len(call.args))
            if found:
                return "internal", found, None
            free = {f.qualified_name for f in self.unit.free_functions if f.name == name and f.body is not None}
            if free:
                return "internal", free, None
            return None
        if isinstance(callee, Member):
            base, name = callee.base, callee.name
            if isinstance(base, Ident):
                if base.name in ("abi", "msg", "block", "tx", "bytes", "string") or name in _BUILTIN_METHODS:
                    return "builtin", set(), None
                if base.name == "super":
                    found = self._lookup_super(contract, name, len(call.args))
                    return ("internal", found, None) if found else None
                if base.name == "this":
                    found = self._lookup_virtual(contract, name, len(call.args))
                    return ("internal", found, None) if found else None
                if base.name in self.contracts and base.name not in self._scope_names(q):
                    found = self._lookup_in(base.name, name, len(call.args))
                    return ("internal", found, None) if found else None
            if isinstance(base, Call) and isinstance(base.callee, Ident) and base.callee.name == "type":
                return "builtin", set(), None
            if name in _BUILTIN_METHODS:
                return "builtin", set(), None
            # typed receiver resolved inside the unit
            rv = root_var(base) if isinstance(base, Ident) else None
            if rv is not None and name not in _EXTERNAL_METHODS:
                tname = self.var_types.get(q, {}).get(rv) or self.state_types.get(rv)
                if tname and tname in self.contracts:
                    found = self._lookup_in(tname, name, len(call.args))
                    if found:
                        return "internal", found, None
            # using-for attached library
            if name not in _EXTERNAL_METHODS:
                for lib in self._using_libs(contract):
                    found = self._lookup_in(lib, name, len(call.args) + 1)
                    if found:
                        return "internal", found, base
            return None
        return None

    def _fn_names(self, contract: str) -> set[str]:
        c = self.contracts.get(contract)
        if c is None:
            return set()
        return {f.name for f in c.function_table.values()}

    def _scope_names(self, q: str) -> set[str]:
        return self.fn_scope.get(q, set())

    def _using_libs(self, contract: str) -> list[str]:
        c = self.contracts.get(contract)
        if c is None:
            return []
        libs: list[str] = []
        for base in c.linearization or [c.name]:
            bc = self.contracts.get(base)
            if bc is None:
                continue
            for u in bc.using_for:
                for lib in u.library.split(","):
                    if lib in self.contracts and lib not in libs:
                        libs.append(lib)
        return libs

    def _lookup_in(self, contract: str, name: str, arity: int) -> set[str]:
        c = self.contracts.get(contract)
        if c is None:
            return set()
        return {
            f.qualified_name
            for f in c.function_table.values()
            if f.name == name and len(f.params) == arity and f.body is not None
        }

    def _lookup_virtual(self, contract: str, name: str, arity: int) -> set[str]:
        """Union over every contract in the unit that inherits ``contract``."""
        out: set[str] = set()
        for c in self.unit.contracts:
            if contract in c.linearization:
                out |= self._lookup_in(c.name, name, arity)
        return out

    def _lookup_super(self, contract: str, name: str, arity: int) -> set[str]:
        c = self.contracts.get(contract)
        if c is None:
            return set()
        for base in c.linearization[1:]:
            bc = self.contracts.get(base)
            if bc is None:
                continue
            for f in bc.functions:
                if f.name == name and len(f.params) == arity and f.body is not None:
                    return {f.qualified_name}
        return set()


def _target_subcalls(t: Expr) -> list[Expr]:
    """Index expressions inside an assignment target (their values are read)."""
    out: list[Expr] = []
    if isinstance(t, Index) and t.index is not None:
        out.append(t.index)
        out.extend(_target_subcalls(t.base))
    elif isinstance(t, Member):
        out.extend(_target_subcalls(t.base))
    elif isinstance(t, TupleExpr):
        for item in t.items:
            if item is not None:
                out.extend(_target_subcalls(item))
    return [x for x in out if any(isinstance(n, Call) for n in walk(x))]


def _copy(state: Optional[dict]) -> Optional[dict]:
    if state is None:
        return None
    return {k: set(v) for k, v in state.items()}


def _merge(a: Optional[dict], b: Optional[dict]) -> Optional[dict]:
    if a is None:
        return _copy(b)
    if b is None:
        return _copy(a)
    out = _copy(a)
    for k, v in b.items():
        out.setdefault(k, set()).update(v)
    return out


def build_ipdg(unit: AstUnit) -> Ipdg:
    return _Builder(unit).build()


# ---------------------------------------------------------------- dumps


def node_label(unit: AstUnit, graph: Ipdg, n: NodeId) -> str:
    atom = node_atom(n)
    if atom is not None:
        return f"atom {atom}"
    kind = graph.kind.get(n, "?")
    if kind == "unknown":
        return f"unknown call L{unit.node_index[-n - _UNKNOWN_BASE].line}"
    sp = unit.node_index.get(n)
    line = sp.line if sp else 0
    if kind == "entry":
        return f"entry {graph.function_of.get(n, '')}"
    text = unit.span_text(n).split("\n", 1)[0].strip() if sp else ""
    if len(text) > 60:
        text = text[:57] + "..."
    return f"L{line} {text}"


def dump_text(graph: Ipdg, unit: Optional[AstUnit] = None) -> str:
    lines = []
    for a, b, k in graph.canonical_edges():
        if unit is None:
            lines.append(f"{a} -> {b} [{k}]")
        else:
            lines.append(f"{a} ({node_label(unit, graph, a)}) -> {b} ({node_label(unit, graph, b)}) [{k}]")
    return "\n".join(lines) + ("\n" if lines else "")


_DOT_COLORS = {"Data": "red", "Control": "blue", "Call": "green"}


def dump_dot(graph: Ipdg, unit: AstUnit) -> str:
    out = ["digraph ipdg {", "  node [shape=box, fontname=monospace];"]
    for n in sorted(graph.nodes):
        label = node_label(unit, graph, n).replace('"', '\\"')
        out.append(f'  n{n if n >= 0 else "m" + str(-n)} [label="{label}"];')
    for a, b, k in graph.canonical_edges():
        na = f"n{a}" if a >= 0 else f"nm{-a}"
        nb = f"n{b}" if b >= 0 else f"nm{-b}"
        out.append(f'  {na} -> {nb} [color={_DOT_COLORS[k]}, label="{k}"];')
    out.append("}")
    return "\n".join(out) + "\n"
