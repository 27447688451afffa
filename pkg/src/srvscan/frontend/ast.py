"""AST node classes for the supported Solidity subset.

Every node carries an integer ``id``; the owning :class:`AstUnit` maps ids to
source spans.  Nodes are plain dataclasses so the tree can be deep-copied and
compared structurally.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

NodeId = int

ENV_ATOMS = frozenset(
    {
        "msg.sender",
        "msg.value",
        "msg.data",
        "block.chainid",
        "block.timestamp",
        "address(this)",
        "tx.origin",
    }
)

ELEMENTARY_TYPES = frozenset(
    ["address", "bool", "string", "bytes", "byte", "int", "uint", "fixed", "ufixed", "payable"]
    + [f"uint{n}" for n in range(8, 257, 8)]
    + [f"int{n}" for n in range(8, 257, 8)]
    + [f"bytes{n}" for n in range(1, 33)]
)

# global functions whose identifier is never a variable
BUILTIN_FUNCS = frozenset(
    {
        "keccak256", "sha256", "sha3", "ripemd160", "ecrecover", "require", "assert",
        "revert", "addmod", "mulmod", "selfdestruct", "suicide", "gasleft", "blockhash",
        "type", "payable", "new",
    }
)

GLOBAL_NAMESPACES = frozenset({"msg", "block", "tx", "abi", "super", "bytes", "string"})


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int
    start: int
    end: int


@dataclass
class Node:
    id: NodeId


# ---------------------------------------------------------------- types


@dataclass
class TypeName(Node):
    """``name`` is an elementary name, a dotted user path, ``mapping``,
    ``array`` or ``function``."""

    name: str
    key: Optional["TypeName"] = None
    value: Optional["TypeName"] = None
    base: Optional["TypeName"] = None
    length: Optional["Expr"] = None

    @property
    def is_mapping(self) -> bool:
        return self.name == "mapping"

    def text(self) -> str:
        if self.name == "mapping":
            return f"mapping({self.key.text()} => {self.value.text()})"
        if self.name == "array":
            n = expr_text(self.length) if self.length is not None else ""
            return f"{self.base.text()}[{n}]"
        return self.name


def canonical_type(t: TypeName) -> str:
    """Type text used in function signatures (aliases expanded)."""
    if t.name == "array":
        n = expr_text(t.length) if t.length is not None else ""
        return f"{canonical_type(t.base)}[{n}]"
    if t.name == "mapping":
        return f"mapping({canonical_type(t.key)}=>{canonical_type(t.value)})"
    aliases = {"uint": "uint256", "int": "int256", "byte": "bytes1", "address payable": "address"}
    name = aliases.get(t.name, t.name)
    return name.rsplit(".", 1)[-1]


# ---------------------------------------------------------------- expressions


@dataclass
class Expr(Node):
    pass


@dataclass
class Ident(Expr):
    name: str


@dataclass
class Literal(Expr):
    kind: str  # number | string | hex | bool
    value: str


@dataclass
class ElementaryTypeExpr(Expr):
    name: str


@dataclass
class Member(Expr):
    base: Expr
    name: str


@dataclass
class Index(Expr):
    base: Expr
    index: Optional[Expr]


@dataclass
class IndexRange(Expr):
    base: Expr
    start: Optional[Expr]
    stop: Optional[Expr]


@dataclass
class Call(Expr):
    callee: Expr
    args: list[Expr]
    arg_names: list[str] = field(default_factory=list)
    options: dict[str, Expr] = field(default_factory=dict)


@dataclass
class Unary(Expr):
    op: str
    operand: Expr
    prefix: bool = True


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Assign(Expr):
    op: str
    target: Expr
    value: Expr


@dataclass
class Conditional(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass
class TupleExpr(Expr):
    items: list[Optional[Expr]]


@dataclass
class ArrayLit(Expr):
    items: list[Expr]


@dataclass
class NewExpr(Expr):
    type_name: TypeName


@dataclass
class TypeExpr(Expr):
    """A type name used as an expression, e.g. ``uint[]`` inside ``abi.decode``."""

    type_name: TypeName


# ---------------------------------------------------------------- statements


@dataclass
class Stmt(Node):
    pass


@dataclass
class LocalVar(Node):
    name: str
    type_name: Optional[TypeName]
    location: str = ""


@dataclass
class Block(Stmt):
    stmts: list[Stmt]
    unchecked: bool = False


@dataclass
class VarDecl(Stmt):
    decls: list[Optional[LocalVar]]
    value: Optional[Expr]


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt]


@dataclass
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    post: Optional[Expr]
    body: Stmt


@dataclass
class While(Stmt):
    cond: Expr
    body: Stmt


@dataclass
class DoWhile(Stmt):
    body: Stmt
    cond: Expr


@dataclass
class Return(Stmt):
    value: Optional[Expr]


@dataclass
class Emit(Stmt):
    call: Expr


@dataclass
class RevertStmt(Stmt):
    call: Expr


@dataclass
class Break(Stmt):
    pass


@dataclass
class Continue(Stmt):
    pass


@dataclass
class Placeholder(Stmt):
    pass


@dataclass
class CatchClause(Node):
    name: str
    params: list["Param"]
    body: Block


@dataclass
class Try(Stmt):
    expr: Expr
    returns: list["Param"]
    body: Block
    catches: list[CatchClause]


@dataclass
class Opaque(Stmt):
    """A statement we do not model: inline assembly or an unparsed construct.

    Only the identifiers it reads and writes are kept.  ``atoms`` holds
    environment values observed inside assembly (``chainid()`` and friends).
    """

    kind: str  # assembly | unparsed
    text: str
    reads: list[str]
    writes: list[str]
    atoms: list[str] = field(default_factory=list)
    ecrecover_count: int = 0


@dataclass
class InlinedModifier(Stmt):
    """Body of a modifier expanded at a function's invocation site."""

    name: str
    bindings: list[VarDecl]
    body: Block
    origin: NodeId = 0


# ---------------------------------------------------------------- declarations


@dataclass
class Param(Node):
    name: Optional[str]
    type_name: TypeName
    location: str = ""
    indexed: bool = False


@dataclass
class ModifierInvocation(Node):
    name: str
    args: Optional[list[Expr]]


@dataclass
class FunctionDef(Node):
    name: str
    kind: str  # function | constructor | fallback | receive
    params: list[Param]
    returns: list[Param]
    visibility: str
    mutability: str
    modifiers: list[ModifierInvocation]
    body: Optional[Block]
    contract: str = ""
    is_virtual: bool = False
    overrides: bool = False
    modifiers_inlined: bool = False

    @property
    def qualified_name(self) -> str:
        return f"{self.contract}.{self.name}"

    @property
    def signature(self) -> str:
        return f"{self.name}({','.join(canonical_type(p.type_name) for p in self.params)})"

    @property
    def is_entry(self) -> bool:
        return self.visibility in ("public", "external") or self.kind in ("fallback", "receive")


@dataclass
class ModifierDef(Node):
    name: str
    params: list[Param]
    body: Optional[Block]
    contract: str = ""


@dataclass
class StateVar(Node):
    name: str
    type_name: TypeName
    visibility: str = "internal"
    constant: bool = False
    immutable: bool = False
    value: Optional[Expr] = None
    contract: str = ""


@dataclass
class StructDef(Node):
    name: str
    members: list[Param]


@dataclass
class EnumDef(Node):
    name: str
    values: list[str]


@dataclass
class EventDef(Node):
    name: str
    params: list[Param]


@dataclass
class ErrorDef(Node):
    name: str
    params: list[Param]


@dataclass
class UsingFor(Node):
    library: str
    target: str


@dataclass
class InheritanceSpec(Node):
    name: str
    args: Optional[list[Expr]]


@dataclass
class ContractDef(Node):
    name: str
    kind: str  # contract | interface | library | abstract
    bases: list[InheritanceSpec]
    state_vars: list[StateVar] = field(default_factory=list)
    functions: list[FunctionDef] = field(default_factory=list)
    modifiers: list[ModifierDef] = field(default_factory=list)
    structs: list[StructDef] = field(default_factory=list)
    enums: list[EnumDef] = field(default_factory=list)
    events: list[EventDef] = field(default_factory=list)
    errors: list[ErrorDef] = field(default_factory=list)
    using_for: list[UsingFor] = field(default_factory=list)
    opaque: list[Opaque] = field(default_factory=list)
    # filled by resolve_inheritance
    linearization: list[str] = field(default_factory=list)
    function_table: dict[str, FunctionDef] = field(default_factory=dict, metadata={"walk": False})
    unresolved_bases: list[str] = field(default_factory=list)


@dataclass
class Import(Node):
    path: str


@dataclass
class AstUnit:
    contracts: list[ContractDef]
    pragma: str
    source_path: str
    node_index: dict[NodeId, Span]
    source: str = ""
    comments: list[str] = field(default_factory=list)
    imports: list[Import] = field(default_factory=list)
    free_functions: list[FunctionDef] = field(default_factory=list)
    next_id: int = 1
    resolved: bool = False
    clone_origin: dict[NodeId, NodeId] = field(default_factory=dict)

    def contract(self, name: str) -> Optional[ContractDef]:
        for c in self.contracts:
            if c.name == name:
                return c
        return None

    def span_text(self, node_id: NodeId) -> str:
        sp = self.node_index[node_id]
        return self.source[sp.start:sp.end]

    def origin(self, node_id: NodeId) -> NodeId:
        return self.clone_origin.get(node_id, node_id)


# ---------------------------------------------------------------- traversal


def children(node) -> Iterator[Node]:
    for f in dataclasses.fields(node):
        if not f.metadata.get("walk", True):
            continue
        val = getattr(node, f.name)
        if isinstance(val, Node):
            yield val
        elif isinstance(val, list):
            for item in val:
                if isinstance(item, Node):
                    yield item
        elif isinstance(val, dict):
            for item in val.values():
                if isinstance(item, Node):
                    yield item


def walk(node) -> Iterator[Node]:
    """Pre-order traversal in field declaration order."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(list(children(n))))


# ---------------------------------------------------------------- expression helpers


def atom_of(e: Expr) -> Optional[str]:
    """Environment atom denoted by ``e``, if any."""
    if isinstance(e, Member) and isinstance(e.base, Ident):
        text = f"{e.base.name}.{e.name}"
        if text in ENV_ATOMS:
            return text
        return None
    if isinstance(e, Ident):
        if e.name == "this":
            return "address(this)"
        if e.name == "now":
            return "block.timestamp"
        return None
    if (
        isinstance(e, Call)
        and isinstance(e.callee, ElementaryTypeExpr)
        and e.callee.name in ("address", "payable")
        and len(e.args) == 1
        and isinstance(e.args[0], Ident)
        and e.args[0].name == "this"
    ):
        return "address(this)"
    return None


def free_vars(e: Optional[Node], exclude: frozenset[str] = frozenset()) -> set[str]:
    """Variables and environment atoms read by an expression.

    Callee identifiers are not variables; names in ``exclude`` (contract and
    library names, typically) are skipped.
    """
    out: set[str] = set()
    if e is not None:
        _free(e, exclude, out)
    return out


def _free(e: Node, exclude: frozenset[str], out: set[str]) -> None:
    atom = atom_of(e) if isinstance(e, Expr) else None
    if atom is not None:
        out.add(atom)
        return
    if isinstance(e, Ident):
        if e.name not in exclude and e.name not in GLOBAL_NAMESPACES and e.name not in BUILTIN_FUNCS:
            out.add(e.name)
        return
    if isinstance(e, Member):
        _free(e.base, exclude, out)
        return
    if isinstance(e, Call):
        callee = e.callee
        if isinstance(callee, Member):
            _free(callee.base, exclude, out)
        elif isinstance(callee, Call):
            _free(callee, exclude, out)
        for a in e.args:
            _free(a, exclude, out)
        for o in e.options.values():
            _free(o, exclude, out)
        return
    if isinstance(e, (TypeExpr, ElementaryTypeExpr, NewExpr, Literal)):
        return
    for c in children(e):
        _free(c, exclude, out)


def called_names(e: Optional[Node]) -> list[str]:
    """Names of functions called (by identifier or member) within ``e``."""
    out: list[str] = []
    if e is None:
        return out
    for n in walk(e):
        if isinstance(n, Call):
            if isinstance(n.callee, Ident):
                out.append(n.callee.name)
            elif isinstance(n.callee, Member):
                out.append(n.callee.name)
    return out


def expr_text(e: Optional[Node]) -> str:
    """Normalized one-line rendering used for matching and reports."""
    if e is None:
        return ""
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, ElementaryTypeExpr):
        return e.name
    if isinstance(e, TypeExpr):
        return e.type_name.text()
    if isinstance(e, Member):
        return f"{expr_text(e.base)}.{e.name}"
    if isinstance(e, Index):
        return f"{expr_text(e.base)}[{expr_text(e.index)}]"
    if isinstance(e, IndexRange):
        return f"{expr_text(e.base)}[{expr_text(e.start)}:{expr_text(e.stop)}]"
    if isinstance(e, Call):
        opts = ""
        if e.options:
            opts = "{" + ", ".join(f"{k}: {expr_text(v)}" for k, v in e.options.items()) + "}"
        if e.arg_names:
            args = "{" + ", ".join(f"{k}: {expr_text(a)}" for k, a in zip(e.arg_names, e.args)) + "}"
        else:
            args = ", ".join(expr_text(a) for a in e.args)
        return f"{expr_text(e.callee)}{opts}({args})"
    if isinstance(e, Unary):
        if e.prefix:
            sep = " " if e.op == "delete" else ""
            return f"{e.op}{sep}{expr_text(e.operand)}"
        return f"{expr_text(e.operand)}{e.op}"
    if isinstance(e, Binary):
        return f"({expr_text(e.left)} {e.op} {expr_text(e.right)})"
    if isinstance(e, Assign):
        return f"{expr_text(e.target)} {e.op} {expr_text(e.value)}"
    if isinstance(e, Conditional):
        return f"({expr_text(e.cond)} ? {expr_text(e.then)} : {expr_text(e.orelse)})"
    if isinstance(e, TupleExpr):
        return "(" + ", ".join(expr_text(i) for i in e.items) + ")"
    if isinstance(e, ArrayLit):
        return "[" + ", ".join(expr_text(i) for i in e.items) + "]"
    if isinstance(e, NewExpr):
        return f"new {e.type_name.text()}"
    return type(e).__name__


def strip_parens(e: Expr) -> Expr:
    while isinstance(e, TupleExpr) and len(e.items) == 1 and e.items[0] is not None:
        e = e.items[0]
    return e


Decl = Union[ContractDef, FunctionDef, ModifierDef, StateVar]
