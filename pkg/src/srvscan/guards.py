"""Three-valued evaluation of guard conditions and guard collection along
statement paths.

Used to decide whether a function's guards reject every out-of-range ``v`` or
``s`` value before a signature is recovered.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterator, Mapping, Optional, Union

from .frontend.ast import (
    AstUnit,
    Binary,
    Block,
    Call,
    Conditional,
    DoWhile,
    ElementaryTypeExpr,
    Expr,
    ExprStmt,
    For,
    If,
    InlinedModifier,
    Literal,
    Member,
    Node,
    NodeId,
    Stmt,
    Try,
    TupleExpr,
    TypeExpr,
    Unary,
    While,
    expr_text,
    walk,
)
from .graph import always_exits, is_require

SECP256K1_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
SECP256K1_HALF_ORDER = SECP256K1_N // 2
UINT256_MAX = (1 << 256) - 1

V_VALID = (27, 28)
V_INVALID = (0, 1, 2, 26, 29, 30, 255)

Value = Union[int, bool, None]

_UNIT_SCALE = {
    "wei": 1, "gwei": 10**9, "szabo": 10**12, "finney": 10**15, "ether": 10**18,
    "seconds": 1, "minutes": 60, "hours": 3600, "days": 86400, "weeks": 604800, "years": 31536000,
}


def s_invalid(half_order: int = SECP256K1_HALF_ORDER) -> tuple[int, ...]:
    """High-s test points above ``half_order``."""
    points = (half_order + 1, 1 << 255, SECP256K1_N - 1, UINT256_MAX)
    return tuple(sorted({p for p in points if half_order < p <= UINT256_MAX}))


def parse_number(text: str) -> Optional[int]:
    parts = text.replace("_", "").split()
    if not parts:
        return None
    body, scale = parts[0], _UNIT_SCALE.get(parts[1], 1) if len(parts) > 1 else 1
    try:
        if body.lower().startswith("0x"):
            return int(body, 16) * scale
        d = Decimal(body) * scale
    except (ValueError, InvalidOperation):
        return None
    return int(d) if d == int(d) else None


def _is_cast(e: Expr) -> bool:
    return (
        isinstance(e, Call)
        and isinstance(e.callee, ElementaryTypeExpr)
        and e.callee.name != "payable"
        and len(e.args) == 1
    )


def strip_casts(e: Expr) -> Expr:
    while True:
        if isinstance(e, TupleExpr) and len(e.items) == 1 and e.items[0] is not None:
            e = e.items[0]
        elif _is_cast(e) and not (isinstance(e.callee, ElementaryTypeExpr) and e.callee.name == "address"):
            e = e.args[0]
        else:
            return e


def match_key(e: Optional[Expr]) -> str:
    """Text used to recognise the same variable across casts and parentheses."""
    return expr_text(strip_casts(e)) if e is not None else ""


def constant_table(unit: AstUnit) -> dict[str, Expr]:
    """Initializers of constant (and immutable-with-initializer) state variables."""
    out: dict[str, Expr] = {}
    for c in unit.contracts:
        for sv in c.state_vars:
            if sv.value is not None and (sv.constant or sv.immutable):
                out.setdefault(sv.name, sv.value)
    return out


class Evaluator:
    """Kleene evaluation: ``None`` means unknown."""

    def __init__(self, bindings: Mapping[str, int], constants: Mapping[str, Expr] | None = None):
        self.bindings = dict(bindings)
        self.constants = dict(constants or {})
        self._active: set[str] = set()

    def value(self, e: Optional[Expr]) -> Value:
        if e is None:
            return None
        key = match_key(e)
        if key in self.bindings:
            return self.bindings[key]
        e = strip_casts(e)
        if isinstance(e, Literal):
            if e.kind == "bool":
                return e.value == "true"
            if e.kind == "number":
                return parse_number(e.value)
            return None
        if isinstance(e, TupleExpr):
            return None
        name = expr_text(e)
        if name in self.constants and name not in self._active:
            self._active.add(name)
            try:
                return self.value(self.constants[name])
            finally:
                self._active.discard(name)
        if isinstance(e, Member) and e.name in ("max", "min") and isinstance(e.base, Call):
            return _type_bound(e)
        if isinstance(e, Unary):
            return self._unary(e)
        if isinstance(e, Binary):
            return self._binary(e)
        if isinstance(e, Conditional):
            c = self.value(e.cond)
            if c is True:
                return self.value(e.then)
            if c is False:
                return self.value(e.orelse)
            a, b = self.value(e.then), self.value(e.orelse)
            return a if a == b and a is not None else None
        return None

    def _unary(self, e: Unary) -> Value:
        x = self.value(e.operand)
        if e.op == "!":
            return (not x) if isinstance(x, bool) else None
        if e.op == "-" and _is_int(x):
            return (-x) % (1 << 256)
        if e.op == "~" and _is_int(x):
            return UINT256_MAX ^ x
        return None

    def _binary(self, e: Binary) -> Value:
        op = e.op
        if op in ("&&", "||"):
            a, b = self.value(e.left), self.value(e.right)
            a = a if isinstance(a, bool) else None
            b = b if isinstance(b, bool) else None
            if op == "&&":
                if a is False or b is False:
                    return False
                return True if a is True and b is True else None
            if a is True or b is True:
                return True
            return False if a is False and b is False else None
        a, b = self.value(e.left), self.value(e.right)
        if a is None or b is None:
            return None
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if not (_is_int(a) and _is_int(b)):
            return None
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        return _arith(op, a, b)


def _is_int(x: Value) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _arith(op: str, a: int, b: int) -> Optional[int]:
    mod = 1 << 256
    if op == "+":
        return (a + b) % mod
    if op == "-":
        return (a - b) % mod
    if op == "*":
        return (a * b) % mod
    if op == "/":
        return a // b if b else None
    if op == "%":
        return a % b if b else None
    if op == "**":
        return pow(a, b, mod) if b < 4096 else None
    if op == "<<":
        return (a << b) % mod if b < 512 else 0
    if op == ">>":
        return a >> b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    return None


def _type_bound(e: Member) -> Optional[int]:
    call = e.base
    if not (isinstance(call, Call) and call.args):
        return None
    arg = call.args[0]
    name = arg.name if isinstance(arg, ElementaryTypeExpr) else arg.type_name.text() if isinstance(arg, TypeExpr) else ""
    for prefix, signed in (("uint", False), ("int", True)):
        if name.startswith(prefix) and name[len(prefix):].isdigit() or name == prefix:
            bits = int(name[len(prefix):] or 256)
            if e.name == "max":
                return (1 << (bits - 1)) - 1 if signed else (1 << bits) - 1
            return None if signed else 0
    return None


# ---------------------------------------------------------------- guards along paths


@dataclass(frozen=True)
class Guard:
    """A condition the path requires to equal ``polarity``."""

    cond: Expr
    polarity: bool
    node: NodeId


def _contains(s: Node, target: NodeId) -> bool:
    return any(n.id == target for n in walk(s))


def guard_paths(body: Optional[Block], target: NodeId, limit: int = 64) -> list[list[Guard]]:
    """Guard lists of up to ``limit`` paths (leftmost first) from the start of
    ``body`` to the statement containing node ``target``."""
    out: list[list[Guard]] = []
    if body is None:
        return out
    for path in _to_target_from(body.stmts, target, []):
        out.append(path)
        if len(out) >= limit:
            break
    return out


def _to_target_from(stmts: list[Stmt], target: NodeId, guards: list[Guard]) -> Iterator[list[Guard]]:
    if not stmts:
        return
    head, rest = stmts[0], stmts[1:]
    if _contains(head, target):
        yield from _into(head, target, guards)
        return
    for g in _through(head, guards):
        yield from _to_target_from(rest, target, g)


def _into(s: Stmt, target: NodeId, guards: list[Guard]) -> Iterator[list[Guard]]:
    if isinstance(s, Block):
        yield from _to_target_from(s.stmts, target, guards)
    elif isinstance(s, InlinedModifier):
        yield from _to_target_from(list(s.bindings) + list(s.body.stmts), target, guards)
    elif isinstance(s, If):
        if _contains(s.then, target):
            yield from _into(s.then, target, guards + [Guard(s.cond, True, s.id)])
        elif s.orelse is not None and _contains(s.orelse, target):
            yield from _into(s.orelse, target, guards + [Guard(s.cond, False, s.id)])
        else:
            yield guards
    elif isinstance(s, (While, For, DoWhile)):
        cond = s.cond
        if _contains(s.body, target):
            g = guards + ([Guard(cond, True, s.id)] if cond is not None and not isinstance(s, DoWhile) else [])
            yield from _into(s.body, target, g)
        else:
            yield guards
    elif isinstance(s, Try):
        if _contains(s.body, target):
            yield from _into(s.body, target, guards)
        else:
            yield guards
    else:
        yield guards


def _through(s: Stmt, guards: list[Guard]) -> Iterator[list[Guard]]:
    """Guard lists after executing ``s`` without reaching the target."""
    if always_exits(s):
        return
    if is_require(s):
        assert isinstance(s, ExprStmt) and isinstance(s.expr, Call)
        if s.expr.args:
            yield guards + [Guard(s.expr.args[0], True, s.id)]
        else:
            yield guards
        return
    if isinstance(s, Block):
        yield from _through_list(s.stmts, guards)
        return
    if isinstance(s, InlinedModifier):
        yield from _through_list(list(s.bindings) + list(s.body.stmts), guards)
        return
    if isinstance(s, If):
        for branch, pol in ((s.then, True), (s.orelse, False)):
            g = guards + [Guard(s.cond, pol, s.id)]
            if branch is None:
                yield g
            else:
                yield from _through(branch, g)
        return
    if isinstance(s, (While, For)):
        # skipped, or entered once
        yield guards
        if s.cond is not None:
            yield from _through(s.body, guards + [Guard(s.cond, True, s.id)])
        return
    yield guards


def _through_list(stmts: list[Stmt], guards: list[Guard]) -> Iterator[list[Guard]]:
    if not stmts:
        yield guards
        return
    for g in _through(stmts[0], guards):
        yield from _through_list(stmts[1:], g)


def rejects(guard: Guard, key: str, value: int, constants: Mapping[str, Expr]) -> bool:
    """True if the guard definitely fails when the variable ``key`` holds ``value``."""
    got = Evaluator({key: value}, constants).value(guard.cond)
    return isinstance(got, bool) and got is not guard.polarity


def path_rejects_all(path: list[Guard], key: str, values: tuple[int, ...], constants: Mapping[str, Expr]) -> bool:
    return all(any(rejects(g, key, x, constants) for g in path) for x in values)


def mentions(e: Expr, key: str) -> bool:
    return any(isinstance(n, Expr) and match_key(n) == key for n in walk(e))
