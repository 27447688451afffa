"""Symbolic execution of a function sequence down to a signature sink.

Values are terms over three sorts: addresses, 256-bit words (compared for
equality only; arithmetic and ordering are uninterpreted functions, folded
on literals) and booleans.  Storage starts unconstrained; mapping reads are
resolved against the writes made earlier on the path.

Replay model: the attacker holds one valid signature tuple observed earlier.
Reaching the sink therefore recovers a fixed non-zero ``signer``, and every
transaction is sent by an ``attacker`` distinct from that signer.  What is
left to decide is whether the other guards on the path can hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import islice
from typing import Iterable, Iterator, Optional, Union

from ..frontend.ast import (
    ENV_ATOMS,
    Assign,
    AstUnit,
    Binary,
    Block,
    Break,
    Call,
    Conditional,
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
    NodeId,
    Opaque,
    Return,
    RevertStmt,
    Stmt,
    Try,
    TupleExpr,
    TypeName,
    Unary,
    VarDecl,
    While,
    atom_of,
)
from ..frontend.sinks import SinkKind, SinkSite
from ..graph import Ipdg
from ..guards import Evaluator, constant_table
from ..slicer import call_graph
from .terms import (
    FALSE,
    TRUE,
    BoolVal,
    Lit,
    PathConstraintSet,
    Sort,
    Term,
    Var,
    and_,
    app,
    coerce,
    eq,
    ite,
    not_,
    or_,
)

MAX_PATHS = 16
MAX_EXPLORED = 256
MAX_DEPTH = 4

INJECTIVE = frozenset({
    "keccak256", "sha256", "ripemd160", "sha3",
    "abi.encode", "abi.encodePacked", "abi.encodeWithSelector", "abi.encodeWithSignature", "abi.encodeCall",
    "toEthSignedMessageHash", "toTypedDataHash",
})
HASHES = frozenset({"keccak256", "sha256", "ripemd160", "sha3"})

ATTACKER = Var("attacker", Sort.ADDR)
SIGNER = Var("signer", Sort.ADDR)
ZERO_ADDR = Lit("0", Sort.ADDR)

_ARITH = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod", "**": "exp",
          "<<": "shl", ">>": "shr", "&": "and", "|": "or", "^": "xor"}
_ORDER = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge"}
_MOD = 1 << 256


class PathNotFound(Exception):
    pass


@dataclass(frozen=True)
class StructVal:
    name: str
    fields: tuple[tuple[str, "Value"], ...]

    def get(self, f: str) -> Optional["Value"]:
        for k, v in self.fields:
            if k == f:
                return v
        return None

    def set(self, f: str, v: "Value") -> "StructVal":
        return StructVal(self.name, tuple((k, v if k == f else old) for k, old in self.fields))


Value = Union[Term, tuple, StructVal, None]


def as_term(v: Value, sort: Sort = Sort.U) -> Term:
    if isinstance(v, StructVal):
        return app("struct." + v.name, [as_term(x) for _, x in v.fields], Sort.U)
    if isinstance(v, tuple):
        return app("tuple", [as_term(x) for x in v], Sort.U)
    if v is None:
        return Lit("0", sort)
    return v


@dataclass
class _State:
    cond: tuple[Term, ...] = ()
    env: dict[str, Value] = field(default_factory=dict)
    store: dict[str, Value] = field(default_factory=dict)
    maps: dict[str, tuple[tuple[tuple[Term, ...], Value], ...]] = field(default_factory=dict)
    contract: str = ""
    flow: Optional[str] = None
    ret: Value = None
    reached: int = 0
    fresh: int = 0
    depth: int = 0
    tx: int = 0

    def fork(self) -> "_State":
        return replace(self, env=dict(self.env), store=dict(self.store), maps=dict(self.maps))

    def assume(self, c: Term) -> Optional["_State"]:
        c = coerce(c, Sort.BOOL)
        if c == FALSE:
            return None
        st = self.fork()
        if c != TRUE:
            st.cond = self.cond + (c,)
        return st

    def new_var(self, hint: str, sort: Sort) -> Var:
        self.fresh += 1
        return Var(f"{hint}#{self.tx}.{self.fresh}", sort)


def sort_of(t: Optional[TypeName], contracts: set[str]) -> Sort:
    if t is None:
        return Sort.U
    name = t.name
    if name in ("address", "address payable") or name.rsplit(".", 1)[-1] in contracts:
        return Sort.ADDR
    if name == "bool":
        return Sort.BOOL
    return Sort.U


def _default(t: Optional[TypeName], contracts: set[str]) -> Value:
    s = sort_of(t, contracts)
    return FALSE if s is Sort.BOOL else Lit("0", s)


class _Machine:
    def __init__(self, unit: AstUnit, site: SinkSite, root_contract: str):
        self.unit = unit
        self.site = site
        self.root = unit.contract(root_contract)
        self.contracts = {c.name for c in unit.contracts}
        self.structs = {s.name: s for c in unit.contracts for s in c.structs}
        self.consts = constant_table(unit)
        self.state_types: dict[str, TypeName] = {}
        for c in unit.contracts:
            for sv in c.state_vars:
                self.state_types.setdefault(sv.name, sv.type_name)
        self.state_consts = {
            sv.name: sv.value for c in unit.contracts for sv in c.state_vars if sv.constant and sv.value is not None
        }
        targets = {site.id} | {i for i, _ in site.instances}
        targets |= {n for n, origin in unit.clone_origin.items() if origin == site.id}
        self.targets = targets

    # -- expressions

    def ev(self, e: Optional[Expr], st: _State) -> Iterator[tuple[Value, _State]]:
        if e is None:
            yield None, st
            return
        atom = atom_of(e)
        if atom is not None:
            yield self.atom(atom, st), st
            return
        if isinstance(e, Literal):
            yield self.literal(e), st
            return
        if isinstance(e, Ident):
            yield self.read_ident(e.name, st), st
            return
        if isinstance(e, TupleExpr):
            if len(e.items) == 1 and e.items[0] is not None:
                yield from self.ev(e.items[0], st)
                return
            for vals, st2 in self.ev_all(list(e.items), st):
                yield tuple(vals), st2
            return
        if isinstance(e, Member):
            yield from self.member(e, st)
            return
        if isinstance(e, Index):
            yield from self.index(e, st)
            return
        if isinstance(e, IndexRange):
            for vals, st2 in self.ev_all([e.base, e.start, e.stop], st):
                yield app("slice", [as_term(v) for v in vals], Sort.U), st2
            return
        if isinstance(e, Unary):
            yield from self.unary(e, st)
            return
        if isinstance(e, Binary):
            yield from self.binary(e, st)
            return
        if isinstance(e, Conditional):
            for c, st2 in self.ev(e.cond, st):
                for (a, b), st3 in self.ev_all([e.then, e.orelse], st2):
                    yield ite(as_term(c, Sort.BOOL), as_term(a), as_term(b)), st3
            return
        if isinstance(e, Assign):
            yield from self.assign(e, st)
            return
        if isinstance(e, Call):
            yield from self.call(e, st)
            return
        if isinstance(e, NewExpr):
            st2 = st.fork()
            yield st2.new_var("new", Sort.ADDR), st2
            return
        folded = Evaluator({}, self.consts).value(e)
        if isinstance(folded, bool):
            yield BoolVal(folded), st
        elif isinstance(folded, int):
            yield Lit(str(folded), Sort.U), st
        else:
            st2 = st.fork()
            yield st2.new_var("expr", Sort.U), st2

    def ev_all(self, exprs: list[Optional[Expr]], st: _State) -> Iterator[tuple[list[Value], _State]]:
        if not exprs:
            yield [], st
            return
        for v, st2 in self.ev(exprs[0], st):
            for rest, st3 in self.ev_all(exprs[1:], st2):
                yield [v] + rest, st3

    def atom(self, atom: str, st: _State) -> Term:
        if atom in ("msg.sender", "tx.origin"):
            return ATTACKER
        if atom == "address(this)":
            return Var("this", Sort.ADDR)
        return Var(atom, Sort.U)

    def literal(self, e: Literal) -> Term:
        if e.kind == "bool":
            return BoolVal(e.value == "true")
        if e.kind == "number":
            n = Evaluator({}, {}).value(e)
            if isinstance(n, int):
                return Lit(str(n % _MOD), Sort.U)
        return Lit(f"{e.kind}:{e.value}", Sort.U)

    def read_ident(self, name: str, st: _State) -> Value:
        if name in st.env:
            return st.env[name]
        if name in self.state_consts:
            folded = Evaluator({}, self.consts).value(self.state_consts[name])
            if isinstance(folded, int) and not isinstance(folded, bool):
                return Lit(str(folded), Sort.U)
            if name in st.store:
                return st.store[name]
            value = self._const_term(name)
            st.store[name] = value
            return value
        if name in self.state_types:
            if name not in st.store:
                st.store[name] = Var(f"state.{name}", sort_of(self.state_types[name], self.contracts))
            return st.store[name]
        return Var(f"free.{name}", Sort.U)

    def _const_term(self, name: str) -> Value:
        probe = _State(contract=self.root.name if self.root else "")
        for v, _ in self.ev(self.state_consts[name], probe):
            return v
        return Var(f"state.{name}", Sort.U)

    def member(self, e: Member, st: _State) -> Iterator[tuple[Value, _State]]:
        if isinstance(e.base, Call) and isinstance(e.base.callee, Ident) and e.base.callee.name == "type":
            folded = Evaluator({}, self.consts).value(e)
            yield (Lit(str(folded), Sort.U) if isinstance(folded, int) else Var(f"type.{e.name}", Sort.U)), st
            return
        if isinstance(e.base, Ident) and e.base.name not in st.env and e.base.name not in self.state_types:
            # enum members, library constants and other static names
            yield Lit(f"{e.base.name}.{e.name}", Sort.U), st
            return
        for base, st2 in self.ev(e.base, st):
            if isinstance(base, StructVal):
                got = base.get(e.name)
                yield (got if got is not None else Lit("0", Sort.U)), st2
            elif e.name == "length":
                yield app("length", [as_term(base)], Sort.U), st2
            else:
                yield app("field." + e.name, [as_term(base)], Sort.U), st2

    def _map_path(self, e: Expr) -> Optional[tuple[str, list[Expr]]]:
        keys: list[Expr] = []
        while isinstance(e, Index):
            if e.index is None:
                return None
            keys.append(e.index)
            e = e.base
        if isinstance(e, Ident) and e.name in self.state_types and self.state_types[e.name].is_mapping:
            return e.name, list(reversed(keys))
        return None

    def _map_value_type(self, name: str, depth: int) -> Optional[TypeName]:
        t = self.state_types.get(name)
        for _ in range(depth):
            if t is None or not t.is_mapping:
                return None
            t = t.value
        return t

    def index(self, e: Index, st: _State) -> Iterator[tuple[Value, _State]]:
        path = self._map_path(e)
        if path is not None and path[0] not in st.env:
            name, key_exprs = path
            for keys, st2 in self.ev_all(key_exprs, st):
                yield self.map_read(name, tuple(as_term(k) for k in keys), st2), st2
            return
        for (base, key), st2 in self.ev_all([e.base, e.index], st):
            yield app("index", [as_term(base), as_term(key)], Sort.U), st2

    def map_read(self, name: str, keys: tuple[Term, ...], st: _State) -> Value:
        vt = self._map_value_type(name, len(keys))
        sort = sort_of(vt, self.contracts) if vt is not None and not vt.is_mapping else Sort.U
        value: Term = app("map." + name, keys, sort)
        for wkeys, wval in st.maps.get(name, ()):
            if len(wkeys) != len(keys):
                continue
            hit = and_(*(eq(a, b) for a, b in zip(keys, wkeys)))
            value = ite(hit, coerce(as_term(wval, sort), sort), value)
        return value

    def unary(self, e: Unary, st: _State) -> Iterator[tuple[Value, _State]]:
        if e.op in ("++", "--"):
            for old, st2 in self.ev(e.operand, st):
                new = self.arith("+" if e.op == "++" else "-", as_term(old), Lit("1", Sort.U))
                for st3 in self.store_to(e.operand, new, st2):
                    yield (new if e.prefix else old), st3
            return
        if e.op == "delete":
            for st2 in self.store_to(e.operand, Lit("0", Sort.U), st):
                yield None, st2
            return
        for v, st2 in self.ev(e.operand, st):
            if e.op == "!":
                yield not_(as_term(v, Sort.BOOL)), st2
            elif e.op == "-":
                t = as_term(v)
                yield (Lit(str((-int(t.value)) % _MOD), Sort.U) if _num(t) else app("neg", [t], Sort.U)), st2
            else:
                yield app("op" + e.op, [as_term(v)], Sort.U), st2

    def arith(self, op: str, a: Term, b: Term) -> Term:
        if _num(a) and _num(b):
            x, y = int(a.value), int(b.value)
            folded = Evaluator({"a": x, "b": y}, {}).value(
                Binary(0, op, Ident(0, "a"), Ident(0, "b"))
            )
            if isinstance(folded, int) and not isinstance(folded, bool):
                return Lit(str(folded % _MOD), Sort.U)
        return app(_ARITH.get(op, "op" + op), [a, b], Sort.U)

    def binary(self, e: Binary, st: _State) -> Iterator[tuple[Value, _State]]:
        for (a, b), st2 in self.ev_all([e.left, e.right], st):
            op = e.op
            if op == "&&":
                yield and_(as_term(a, Sort.BOOL), as_term(b, Sort.BOOL)), st2
            elif op == "||":
                yield or_(as_term(a, Sort.BOOL), as_term(b, Sort.BOOL)), st2
            elif op == "==":
                yield eq(as_term(a), as_term(b)), st2
            elif op == "!=":
                yield not_(eq(as_term(a), as_term(b))), st2
            elif op in _ORDER:
                ta, tb = as_term(a), as_term(b)
                if _num(ta) and _num(tb):
                    folded = Evaluator({"a": int(ta.value), "b": int(tb.value)}, {}).value(
                        Binary(0, op, Ident(0, "a"), Ident(0, "b")))
                    yield BoolVal(bool(folded)), st2
                else:
                    yield app(_ORDER[op], [ta, tb], Sort.BOOL), st2
            else:
                yield self.arith(op, as_term(a), as_term(b)), st2

    def assign(self, e: Assign, st: _State) -> Iterator[tuple[Value, _State]]:
        if e.op == "=":
            for v, st2 in self.ev(e.value, st):
                if isinstance(e.target, TupleExpr) and isinstance(v, tuple):
                    st3 = st2
                    for item, part in zip(e.target.items, v):
                        if item is not None:
                            st3 = next(iter(self.store_to(item, part, st3)), st3)
                    yield v, st3
                else:
                    for st3 in self.store_to(e.target, v, st2):
                        yield v, st3
            return
        op = e.op[:-1]
        for (old, v), st2 in self.ev_all([e.target, e.value], st):
            new = self.arith(op, as_term(old), as_term(v))
            for st3 in self.store_to(e.target, new, st2):
                yield new, st3

    def store_to(self, target: Expr, value: Value, st: _State) -> Iterator[_State]:
        if isinstance(target, TupleExpr) and len(target.items) == 1 and target.items[0] is not None:
            yield from self.store_to(target.items[0], value, st)
            return
        if isinstance(target, Ident):
            st2 = st.fork()
            if target.name in st2.env or target.name not in self.state_types:
                st2.env[target.name] = value
            else:
                st2.store[target.name] = value
            yield st2
            return
        path = self._map_path(target) if isinstance(target, Index) else None
        if path is not None and path[0] not in st.env:
            name, key_exprs = path
            for keys, st2 in self.ev_all(key_exprs, st):
                st3 = st2.fork()
                st3.maps[name] = st3.maps.get(name, ()) + ((tuple(as_term(k) for k in keys), value),)
                yield st3
            return
        if isinstance(target, Member) and isinstance(target.base, Ident) and target.base.name in st.env:
            base = st.env[target.base.name]
            st2 = st.fork()
            if isinstance(base, StructVal):
                st2.env[target.base.name] = base.set(target.name, value)
            yield st2
            return
        # writes into storage we do not track: evaluate the target's subexpressions only
        for _, st2 in self.ev_all(_subexprs(target), st):
            yield st2

    # -- calls

    def call(self, e: Call, st: _State) -> Iterator[tuple[Value, _State]]:
        callee = e.callee
        name = callee.name if isinstance(callee, (Ident, Member)) else ""
        if e.id in self.targets:
            yield from self.sink(e, st)
            return
        if isinstance(callee, Ident) and name in ("require", "assert"):
            for vals, st2 in self.ev_all(list(e.args), st):
                st3 = st2.assume(as_term(vals[0], Sort.BOOL)) if vals else st2
                if st3 is not None:
                    yield None, st3
            return
        if isinstance(callee, Ident) and name == "revert":
            return
        if isinstance(callee, ElementaryTypeExpr):
            for vals, st2 in self.ev_all(list(e.args), st):
                yield self.cast(callee.name, vals[0] if vals else None), st2
            return
        if isinstance(callee, Ident) and name in self.structs:
            yield from self.struct_ctor(e, st)
            return
        if isinstance(callee, Ident) and name in self.contracts and len(e.args) == 1:
            for vals, st2 in self.ev_all(list(e.args), st):
                yield coerce(as_term(vals[0]), Sort.ADDR), st2
            return
        if isinstance(callee, Ident) and name in HASHES:
            for vals, st2 in self.ev_all(list(e.args), st):
                yield app(name, [as_term(v) for v in vals], Sort.U), st2
            return
        if isinstance(callee, Ident) and name == "ecrecover":
            for vals, st2 in self.ev_all(list(e.args), st):
                yield app("ecrecover", [as_term(v) for v in vals], Sort.ADDR), st2
            return
        if isinstance(callee, Member) and isinstance(callee.base, Ident) and callee.base.name == "abi":
            for vals, st2 in self.ev_all(list(e.args), st):
                if name == "decode":
                    st3 = st2.fork()
                    yield st3.new_var("decoded", Sort.U), st3
                else:
                    yield app("abi." + name, [as_term(v) for v in vals], Sort.U), st2
            return
        target = self.resolve(e, st)
        if target is not None:
            fn, receiver = target
            args: list[Optional[Expr]] = ([receiver] if receiver is not None else []) + list(e.args)
            yield from self.invoke(fn, args, e, st)
            return
        yield from self.external(e, st)

    def sink(self, e: Call, st: _State) -> Iterator[tuple[Value, _State]]:
        args: list[Optional[Expr]] = list(e.args)
        if isinstance(e.callee, Member) and self.site.kind is not SinkKind.BARE:
            base = e.callee.base
            if not (isinstance(base, Ident) and base.name in (self.site.library, "ECDSA")):
                args = [base] + args
        for vals, st2 in self.ev_all(args, st):
            terms = [as_term(v) for v in vals]
            recovered = app(
                "ecrecover" if self.site.kind is SinkKind.BARE else "recover", terms, Sort.ADDR
            )
            st3 = st2.assume(eq(recovered, SIGNER))
            if st3 is None:
                continue
            st3.reached += 1
            if self.site.kind is SinkKind.LIBRARY_TRY_RECOVER:
                yield (recovered, Lit("RecoverError.NoError", Sort.U)), st3
            else:
                yield recovered, st3

    def cast(self, type_name: str, v: Value) -> Value:
        if type_name in ("payable", "string", "bytes"):
            return v
        t = as_term(v)
        if type_name == "address":
            return coerce(t, Sort.ADDR)
        if type_name == "bool":
            return coerce(t, Sort.BOOL)
        return coerce(t, Sort.U)

    def struct_ctor(self, e: Call, st: _State) -> Iterator[tuple[Value, _State]]:
        sd = self.structs[e.callee.name]
        names = [m.name or "" for m in sd.members]
        for vals, st2 in self.ev_all(list(e.args), st):
            if e.arg_names:
                given = dict(zip(e.arg_names, vals))
                fields = tuple((n, given.get(n, Lit("0", Sort.U))) for n in names)
            else:
                fields = tuple(zip(names, vals))
            yield StructVal(sd.name, fields), st2

    def external(self, e: Call, st: _State) -> Iterator[tuple[Value, _State]]:
        callee = e.callee
        name = callee.name if isinstance(callee, (Ident, Member)) else "call"
        parts: list[Optional[Expr]] = list(e.args) + list(e.options.values())
        if isinstance(callee, Member):
            parts = [callee.base] + parts
        for vals, st2 in self.ev_all(parts, st):
            st3 = st2.fork()
            if name in ("call", "delegatecall", "staticcall"):
                yield (st3.new_var("ok", Sort.BOOL), st3.new_var("ret", Sort.U)), st3
            elif name in ("transfer", "push", "pop", "emit"):
                yield None, st3
            elif name == "send":
                yield st3.new_var("ok", Sort.BOOL), st3
            elif name in ("toEthSignedMessageHash", "toTypedDataHash"):
                args = [as_term(v) for v in vals[1:]] if isinstance(callee, Member) else [as_term(v) for v in vals]
                yield app(name, args, Sort.U), st3
            else:
                yield st3.new_var(f"ext.{name}", Sort.U), st3

    def _table(self, contract: str) -> list[FunctionDef]:
        c = self.unit.contract(contract)
        if c is None:
            return []
        return list(c.function_table.values()) or list(c.functions)

    def _lookup(self, contract: str, name: str, arity: int) -> Optional[FunctionDef]:
        for f in self._table(contract):
            if f.name == name and len(f.params) == arity and f.body is not None:
                return f
        return None

    def resolve(self, e: Call, st: _State) -> Optional[tuple[FunctionDef, Optional[Expr]]]:
        callee = e.callee
        arity = len(e.args)
        root = self.root.name if self.root else st.contract
        if isinstance(callee, Ident):
            if callee.name in st.env:
                return None
            frame = self.unit.contract(st.contract)
            if frame is not None and frame.kind == "library":
                f = self._lookup(st.contract, callee.name, arity)
            else:
                f = self._lookup(root, callee.name, arity) or self._lookup(st.contract, callee.name, arity)
            if f is None:
                f = next((g for g in self.unit.free_functions
                          if g.name == callee.name and len(g.params) == arity and g.body is not None), None)
            return (f, None) if f is not None else None
        if isinstance(callee, Member):
            base = callee.base
            if isinstance(base, Ident):
                if base.name == "this":
                    f = self._lookup(root, callee.name, arity)
                    return (f, None) if f else None
                if base.name == "super":
                    c = self.unit.contract(st.contract)
                    lin = self.root.linearization if self.root else []
                    after = lin[lin.index(st.contract) + 1:] if c and st.contract in lin else []
                    for b in after:
                        bc = self.unit.contract(b)
                        f = next((g for g in (bc.functions if bc else [])
                                  if g.name == callee.name and len(g.params) == arity and g.body), None)
                        if f is not None:
                            return f, None
                    return None
                if base.name in self.contracts and base.name not in st.env:
                    bc = self.unit.contract(base.name)
                    if bc is not None and bc.kind == "library":
                        f = self._lookup(base.name, callee.name, arity)
                        return (f, None) if f else None
                    return None
            for lib in self._using_libs():
                f = self._lookup(lib, callee.name, arity + 1)
                if f is not None:
                    return f, base
        return None

    def _using_libs(self) -> list[str]:
        out: list[str] = []
        for b in (self.root.linearization if self.root else []):
            bc = self.unit.contract(b)
            for u in (bc.using_for if bc else []):
                for lib in u.library.split(","):
                    c = self.unit.contract(lib)
                    if c is not None and lib not in out:
                        out.append(lib)
        return out

    def invoke(self, fn: FunctionDef, arg_exprs: list[Optional[Expr]], e: Expr, st: _State) -> Iterator[tuple[Value, _State]]:
        if st.depth >= MAX_DEPTH:
            for _, st2 in self.ev_all(arg_exprs, st):
                st3 = st2.fork()
                yield st3.new_var(f"call.{fn.name}", Sort.U), st3
            return
        for vals, st2 in self.ev_all(arg_exprs, st):
            saved_env, saved_contract = st2.env, st2.contract
            inner = st2.fork()
            inner.env = {}
            for p, v in zip(fn.params, vals):
                if p.name:
                    inner.env[p.name] = v
            for p in fn.returns:
                if p.name:
                    inner.env[p.name] = _default(p.type_name, self.contracts)
            inner.contract = fn.contract or saved_contract
            inner.depth += 1
            for out in self.exec_block(fn.body.stmts if fn.body else [], inner):
                if out.flow == "return":
                    ret = out.ret
                else:
                    named = [out.env.get(p.name) if p.name else None for p in fn.returns]
                    ret = named[0] if len(named) == 1 else (tuple(named) if named else None)
                back = out.fork()
                back.env, back.contract = dict(saved_env), saved_contract
                back.flow, back.ret = None, None
                back.depth -= 1
                yield ret, back

    # -- statements

    def exec_block(self, stmts: list[Stmt], st: _State) -> Iterator[_State]:
        if not stmts or st.flow is not None:
            yield st
            return
        for st2 in self.exec(stmts[0], st):
            if st2.flow is not None:
                yield st2
            else:
                yield from self.exec_block(stmts[1:], st2)

    def exec(self, s: Stmt, st: _State) -> Iterator[_State]:
        if isinstance(s, Block):
            yield from self.exec_block(s.stmts, st)
        elif isinstance(s, InlinedModifier):
            yield from self.exec_block(list(s.bindings) + list(s.body.stmts), st)
        elif isinstance(s, VarDecl):
            for v, st2 in self.ev(s.value, st):
                st3 = st2.fork()
                decls = s.decls
                if len(decls) == 1 and decls[0] is not None:
                    d = decls[0]
                    st3.env[d.name] = v if s.value is not None else _default(d.type_name, self.contracts)
                else:
                    parts = v if isinstance(v, tuple) else tuple(None for _ in decls)
                    for d, part in zip(decls, parts):
                        if d is not None:
                            st3.env[d.name] = part
                yield st3
        elif isinstance(s, ExprStmt):
            for _, st2 in self.ev(s.expr, st):
                yield st2
        elif isinstance(s, If):
            for c, st2 in self.ev(s.cond, st):
                ct = as_term(c, Sort.BOOL)
                yes = st2.assume(ct)
                if yes is not None:
                    yield from self.exec(s.then, yes)
                no = st2.assume(not_(ct))
                if no is not None:
                    if s.orelse is not None:
                        yield from self.exec(s.orelse, no)
                    else:
                        yield no
        elif isinstance(s, (While, For, DoWhile)):
            yield from self.loop(s, st)
        elif isinstance(s, Return):
            for v, st2 in self.ev(s.value, st):
                st3 = st2.fork()
                st3.ret, st3.flow = v, "return"
                yield st3
        elif isinstance(s, Emit):
            call = s.call
            args = list(call.args) if isinstance(call, Call) else []
            for _, st2 in self.ev_all(args, st):
                yield st2
        elif isinstance(s, RevertStmt):
            return
        elif isinstance(s, (Break, Continue)):
            st2 = st.fork()
            st2.flow = "break" if isinstance(s, Break) else "continue"
            yield st2
        elif isinstance(s, Opaque):
            st2 = st.fork()
            if s.id in self.targets:
                st2.reached += 1
            for w in s.writes:
                value = st2.new_var(f"asm.{w}", Sort.U)
                if w in st2.env or w not in self.state_types:
                    st2.env[w] = value
                else:
                    st2.store[w] = value
            yield st2
        elif isinstance(s, Try):
            yield from self.try_stmt(s, st)
        else:
            yield st

    def try_stmt(self, s: Try, st: _State) -> Iterator[_State]:
        for _, st2 in self.ev(s.expr, st):
            body = st2.fork()
            for p in s.returns:
                if p.name:
                    body.env[p.name] = body.new_var(f"try.{p.name}", sort_of(p.type_name, self.contracts))
            yield from self.exec(s.body, body)
            for cc in s.catches:
                alt = st2.fork()
                for p in cc.params:
                    if p.name:
                        alt.env[p.name] = alt.new_var(f"catch.{p.name}", Sort.U)
                yield from self.exec(cc.body, alt)

    def loop(self, s: Stmt, st: _State) -> Iterator[_State]:
        """Entered once (entry condition only) or skipped."""
        starts = self.exec(s.init, st) if isinstance(s, For) and s.init is not None else iter([st])
        for st1 in starts:
            if isinstance(s, DoWhile):
                for st2 in self.exec(s.body, st1):
                    yield _leave_loop(st2)
                continue
            cond = s.cond
            for c, st2 in self.ev(cond, st1) if cond is not None else iter([(TRUE, st1)]):
                ct = as_term(c, Sort.BOOL)
                enter = st2.assume(ct)
                if enter is not None:
                    for st3 in self.exec(s.body, enter):
                        if isinstance(s, For) and s.post is not None and st3.flow in (None, "continue"):
                            st3 = _leave_loop(st3)
                            for _, st4 in self.ev(s.post, st3):
                                yield st4
                        else:
                            yield _leave_loop(st3)
                skip = st2.assume(not_(ct))
                if skip is not None:
                    yield skip


def _leave_loop(st: _State) -> _State:
    if st.flow in ("break", "continue"):
        st = st.fork()
        st.flow = None
    return st


def _num(t: Term) -> bool:
    return isinstance(t, Lit) and t.sort is Sort.U and t.value.isdigit()


def _subexprs(e: Expr) -> list[Optional[Expr]]:
    if isinstance(e, Index):
        return [e.base, e.index]
    if isinstance(e, Member):
        return [e.base]
    return []


# ---------------------------------------------------------------- public surface


def resolve_sequence(unit: AstUnit, contract: str, names: Iterable[str]) -> list[FunctionDef]:
    c = unit.contract(contract)
    table = list(c.function_table.values()) if c is not None else []
    out: list[FunctionDef] = []
    for name in names:
        short = name.rsplit(".", 1)[-1]
        fn = next((f for f in table if f.name == short and f.body is not None), None)
        if fn is None:
            fn = next((f for k in unit.contracts for f in k.functions if f.name == short and f.body is not None), None)
        if fn is None:
            raise PathNotFound(f"function {name!r} is not defined in the analysed unit")
        out.append(fn)
    return out


def transactions(graph: Ipdg, fns: list[FunctionDef]) -> list[FunctionDef]:
    """Roots of the transactions a sequence describes: a function that the
    current root reaches through calls runs inside that transaction."""
    cg = call_graph(graph)
    roots: list[FunctionDef] = []
    reach: set[str] = set()
    for fn in fns:
        q = fn.qualified_name
        if roots and q in reach:
            continue
        roots.append(fn)
        reach = _reachable(cg, q)
    return roots


def _reachable(cg: dict[str, set[str]], q: str) -> set[str]:
    seen: set[str] = set()
    stack = [q]
    while stack:
        x = stack.pop()
        for y in cg.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def replay_assumptions() -> list[Term]:
    return [not_(eq(SIGNER, ZERO_ADDR)), not_(eq(ATTACKER, SIGNER))]


def enumerate_path_constraints(
    unit: AstUnit, graph: Ipdg, sequence: Iterable[str], site: SinkSite, function: str,
    max_paths: int = MAX_PATHS,
) -> list[PathConstraintSet]:
    """Constraint sets of up to ``max_paths`` sink-reaching paths, leftmost first."""
    seq = tuple(sequence)
    contract = function.split(".", 1)[0]
    fns = resolve_sequence(unit, contract, seq)
    short = function.rsplit(".", 1)[-1]
    if short not in {f.name for f in fns}:
        raise PathNotFound(f"sequence {list(seq)} does not include {function}")
    roots = transactions(graph, fns)
    machine = _Machine(unit, site, contract)
    contracts = machine.contracts

    def run(i: int, st: _State) -> Iterator[_State]:
        if i == len(roots):
            yield st
            return
        fn = roots[i]
        tx = st.fork()
        tx.tx, tx.env, tx.flow, tx.ret, tx.depth = i, {}, None, None, 0
        tx.contract = fn.contract
        for p in fn.params:
            if p.name:
                tx.env[p.name] = Var(f"{fn.name}.{p.name}@{i}", sort_of(p.type_name, contracts))
        for p in fn.returns:
            if p.name:
                tx.env[p.name] = _default(p.type_name, contracts)
        for out in machine.exec_block(fn.body.stmts if fn.body else [], tx):
            yield from run(i + 1, out)

    injective = INJECTIVE | {"tuple"} | {"struct." + n for n in machine.structs}
    found: list[PathConstraintSet] = []
    for st in islice(run(0, _State(contract=contract)), MAX_EXPLORED):
        if st.reached:
            found.append(PathConstraintSet.of(list(st.cond) + replay_assumptions(), injective, seq))
            if len(found) >= max_paths:
                break
    if not found:
        raise PathNotFound(f"no path along {list(seq)} reaches the sink in {function}")
    return found


def build_path_constraints(unit: AstUnit, graph: Ipdg, sequence: Iterable[str], site: SinkSite,
                           function: str) -> PathConstraintSet:
    """Constraints of the leftmost path along ``sequence`` that reaches the sink."""
    return enumerate_path_constraints(unit, graph, sequence, site, function, max_paths=1)[0]
