"""Quantifier-free terms over equality, booleans and uninterpreted functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Union


class Sort(Enum):
    ADDR = "Addr"
    U = "U"
    BOOL = "Bool"


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class Lit:
    """A literal constant; distinct literals of one sort denote distinct values."""

    value: str
    sort: Sort


@dataclass(frozen=True)
class BoolVal:
    value: bool

    @property
    def sort(self) -> Sort:
        return Sort.BOOL


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["Term", ...]
    sort: Sort


@dataclass(frozen=True)
class Eq:
    a: "Term"
    b: "Term"

    @property
    def sort(self) -> Sort:
        return Sort.BOOL


@dataclass(frozen=True)
class Not:
    a: "Term"

    @property
    def sort(self) -> Sort:
        return Sort.BOOL


@dataclass(frozen=True)
class And:
    args: tuple["Term", ...]

    @property
    def sort(self) -> Sort:
        return Sort.BOOL


@dataclass(frozen=True)
class Or:
    args: tuple["Term", ...]

    @property
    def sort(self) -> Sort:
        return Sort.BOOL


@dataclass(frozen=True)
class Ite:
    c: "Term"
    a: "Term"
    b: "Term"

    @property
    def sort(self) -> Sort:
        return self.a.sort


Term = Union[Var, Lit, BoolVal, App, Eq, Not, And, Or, Ite]

TRUE = BoolVal(True)
FALSE = BoolVal(False)


@dataclass(frozen=True)
class FunDecl:
    name: str
    arg_sorts: tuple[Sort, ...]
    sort: Sort
    injective: bool = False


# ---------------------------------------------------------------- smart constructors


def coerce(t: Term, sort: Sort) -> Term:
    """View ``t`` at ``sort``; address/word conversions are uninterpreted."""
    if t.sort is sort:
        return t
    if isinstance(t, Lit) and sort is not Sort.BOOL and t.sort is not Sort.BOOL:
        return Lit(t.value, sort)
    if sort is Sort.BOOL:
        return Not(eq(t, Lit("0", t.sort)))
    if t.sort is Sort.BOOL:
        return ite(t, Lit("1", sort), Lit("0", sort))
    return App("to" + sort.value.lower(), (t,), sort)


def eq(a: Term, b: Term) -> Term:
    if a.sort is not b.sort:
        if Sort.BOOL in (a.sort, b.sort):
            a, b = coerce(a, Sort.BOOL), coerce(b, Sort.BOOL)
        elif isinstance(b, Lit) or a.sort is Sort.ADDR:
            b = coerce(b, a.sort)
        else:
            a = coerce(a, b.sort)
    if a == b:
        return TRUE
    if isinstance(a, (Lit, BoolVal)) and isinstance(b, (Lit, BoolVal)):
        return FALSE
    if isinstance(a, BoolVal):
        return b if a.value else not_(b)
    if isinstance(b, BoolVal):
        return a if b.value else not_(a)
    return Eq(a, b)


def not_(a: Term) -> Term:
    a = coerce(a, Sort.BOOL)
    if isinstance(a, BoolVal):
        return BoolVal(not a.value)
    if isinstance(a, Not):
        return a.a
    return Not(a)


def and_(*args: Term) -> Term:
    out: list[Term] = []
    for a in args:
        a = coerce(a, Sort.BOOL)
        if a == FALSE:
            return FALSE
        if a == TRUE:
            continue
        parts = a.args if isinstance(a, And) else (a,)
        out.extend(p for p in parts if p not in out)
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def or_(*args: Term) -> Term:
    out: list[Term] = []
    for a in args:
        a = coerce(a, Sort.BOOL)
        if a == TRUE:
            return TRUE
        if a == FALSE:
            continue
        parts = a.args if isinstance(a, Or) else (a,)
        out.extend(p for p in parts if p not in out)
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def implies(a: Term, b: Term) -> Term:
    return or_(not_(a), b)


def ite(c: Term, a: Term, b: Term) -> Term:
    c = coerce(c, Sort.BOOL)
    if a.sort is not b.sort:
        b = coerce(b, a.sort)
    if c == TRUE or a == b:
        return a
    if c == FALSE:
        return b
    return Ite(c, a, b)


def app(fn: str, args: Iterable[Term], sort: Sort) -> App:
    """Application of ``fn``; the name is qualified by the argument sorts so
    one name used at different sorts yields different functions."""
    args = tuple(args)
    tag = "".join(a.sort.value[0] for a in args)
    return App(f"{fn}/{tag}" if args else fn, args, sort)


# ---------------------------------------------------------------- traversal


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, App):
            stack.extend(reversed(x.args))
        elif isinstance(x, (Eq,)):
            stack.extend((x.b, x.a))
        elif isinstance(x, Not):
            stack.append(x.a)
        elif isinstance(x, (And, Or)):
            stack.extend(reversed(x.args))
        elif isinstance(x, Ite):
            stack.extend((x.b, x.a, x.c))


def free_vars(terms: Iterable[Term]) -> dict[str, Sort]:
    out: dict[str, Sort] = {}
    for t in terms:
        for x in subterms(t):
            if isinstance(x, Var):
                out.setdefault(x.name, x.sort)
    return out


def literals(terms: Iterable[Term]) -> dict[Sort, set[str]]:
    out: dict[Sort, set[str]] = {}
    for t in terms:
        for x in subterms(t):
            if isinstance(x, Lit):
                out.setdefault(x.sort, set()).add(x.value)
    return out


def applications(terms: Iterable[Term]) -> list[App]:
    seen: dict[App, None] = {}
    for t in terms:
        for x in subterms(t):
            if isinstance(x, App):
                seen.setdefault(x, None)
    return list(seen)


def render(t: Term) -> str:
    """Readable infix form, for reports and debugging."""
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, BoolVal):
        return "true" if t.value else "false"
    if isinstance(t, App):
        return f"{t.fn.split('/')[0]}({', '.join(render(a) for a in t.args)})"
    if isinstance(t, Eq):
        return f"{render(t.a)} == {render(t.b)}"
    if isinstance(t, Not):
        if isinstance(t.a, Eq):
            return f"{render(t.a.a)} != {render(t.a.b)}"
        return f"!({render(t.a)})"
    if isinstance(t, And):
        return " && ".join(f"({render(a)})" for a in t.args)
    if isinstance(t, Or):
        return " || ".join(f"({render(a)})" for a in t.args)
    return f"({render(t.c)} ? {render(t.a)} : {render(t.b)})"


@dataclass
class PathConstraintSet:
    """Assertions to satisfy together, with the declarations they need."""

    variables: dict[str, Sort] = field(default_factory=dict)
    assertions: list[Term] = field(default_factory=list)
    uninterpreted: dict[str, FunDecl] = field(default_factory=dict)
    sequence: tuple[str, ...] = ()

    @classmethod
    def of(cls, assertions: Iterable[Term], injective: Iterable[str] = (), sequence: Iterable[str] = ()) -> "PathConstraintSet":
        asserts = [coerce(a, Sort.BOOL) for a in assertions]
        inj = set(injective)
        decls: dict[str, FunDecl] = {}
        for a in applications(asserts):
            base = a.fn.split("/")[0]
            decls.setdefault(a.fn, FunDecl(a.fn, tuple(x.sort for x in a.args), a.sort, base in inj))
        return cls(free_vars(asserts), asserts, decls, tuple(sequence))

    def validate(self) -> None:
        for name, sort in free_vars(self.assertions).items():
            if self.variables.get(name) is not sort:
                raise ValueError(f"undeclared variable {name}")
        for a in applications(self.assertions):
            d = self.uninterpreted.get(a.fn)
            if d is None or d.arg_sorts != tuple(x.sort for x in a.args) or d.sort is not a.sort:
                raise ValueError(f"undeclared function {a.fn}")

    def pretty(self) -> list[str]:
        return [render(a) for a in self.assertions]
