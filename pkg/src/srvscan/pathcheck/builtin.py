"""Finite-domain decision procedure for the equality/boolean/UF fragment.

Function applications are first replaced by fresh variables plus
congruence constraints (and the converse for injective functions).  The
remaining formula only compares values for equality, so its satisfiability
depends on which variables share a value, not on the values themselves: the
search assigns each variable a literal, a value already in use, or one new
value.  New values per sort are capped; if the cap ever cut the search and
no model was found, the answer is Unknown rather than UNSAT.
"""

from __future__ import annotations

import time
from typing import Optional

from .terms import (
    And,
    App,
    BoolVal,
    Eq,
    Ite,
    Lit,
    Not,
    Or,
    PathConstraintSet,
    Sort,
    Term,
    Var,
    and_,
    eq,
    implies,
    subterms,
)
from .verdict import ReachabilityVerdict, Status

DEFAULT_CAPS = {Sort.ADDR: 4, Sort.U: 8}

Value = object


class _Deadline(Exception):
    pass


def ackermannize(pcs: PathConstraintSet) -> list[Term]:
    """Equisatisfiable application-free assertions."""
    names: dict[App, Var] = {}

    def flat(t: Term) -> Term:
        if isinstance(t, App):
            key = App(t.fn, tuple(flat(a) for a in t.args), t.sort)
            if key not in names:
                names[key] = Var(f"!{len(names)}:{t.fn}", t.sort)
            return names[key]
        if isinstance(t, Eq):
            return Eq(flat(t.a), flat(t.b))
        if isinstance(t, Not):
            return Not(flat(t.a))
        if isinstance(t, And):
            return And(tuple(flat(a) for a in t.args))
        if isinstance(t, Or):
            return Or(tuple(flat(a) for a in t.args))
        if isinstance(t, Ite):
            return Ite(flat(t.c), flat(t.a), flat(t.b))
        return t

    out = [flat(a) for a in pcs.assertions]
    by_fn: dict[str, list[App]] = {}
    for a in names:
        by_fn.setdefault(a.fn, []).append(a)
    for fn, apps in by_fn.items():
        decl = pcs.uninterpreted.get(fn)
        injective = decl is not None and decl.injective
        for i, p in enumerate(apps):
            for q in apps[i + 1:]:
                same_args = and_(*(eq(x, y) for x, y in zip(p.args, q.args)))
                same_result = eq(names[p], names[q])
                out.append(implies(same_args, same_result))
                if injective:
                    out.append(implies(same_result, same_args))
    return out


def evaluate(t: Term, env: dict[str, Value]) -> Optional[Value]:
    """Kleene evaluation under a partial assignment; None is unknown."""
    if isinstance(t, Var):
        return env.get(t.name)
    if isinstance(t, Lit):
        return ("lit", t.value)
    if isinstance(t, BoolVal):
        return t.value
    if isinstance(t, Eq):
        if t.a == t.b:
            return True
        a, b = evaluate(t.a, env), evaluate(t.b, env)
        return None if a is None or b is None else a == b
    if isinstance(t, Not):
        a = evaluate(t.a, env)
        return None if a is None else not a
    if isinstance(t, And):
        unknown = False
        for x in t.args:
            v = evaluate(x, env)
            if v is False:
                return False
            unknown |= v is None
        return None if unknown else True
    if isinstance(t, Or):
        unknown = False
        for x in t.args:
            v = evaluate(x, env)
            if v is True:
                return True
            unknown |= v is None
        return None if unknown else False
    if isinstance(t, Ite):
        c = evaluate(t.c, env)
        if c is True:
            return evaluate(t.a, env)
        if c is False:
            return evaluate(t.b, env)
        a, b = evaluate(t.a, env), evaluate(t.b, env)
        return a if a is not None and a == b else None
    raise TypeError(f"unexpected term {t!r}")


def _vars_in_order(terms: list[Term]) -> list[Var]:
    seen: dict[str, Var] = {}
    for t in terms:
        for x in subterms(t):
            if isinstance(x, Var):
                seen.setdefault(x.name, x)
    return list(seen.values())


def _components(terms: list[Term]) -> list[list[Term]]:
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tvars = [[v.name for v in _vars_in_order([t])] for t in terms]
    for vs in tvars:
        for v in vs[1:]:
            parent[find(v)] = find(vs[0])
    groups: dict[str, list[Term]] = {}
    for t, vs in zip(terms, tvars):
        key = find(vs[0]) if vs else ""
        groups.setdefault(key, []).append(t)
    return [groups[k] for k in sorted(groups, key=lambda k: terms.index(groups[k][0]))]


class _Search:
    def __init__(self, terms: list[Term], lits: dict[Sort, list[str]], caps: dict[Sort, int], deadline: float):
        self.terms = terms
        self.vars = _vars_in_order(terms)
        self.lits = lits
        self.caps = caps
        self.deadline = deadline
        self.capped = False
        self.steps = 0
        # each assertion is checked once its last variable is assigned, and
        # earlier whenever it mentions the variable just assigned
        self.watch: dict[str, list[Term]] = {}
        for t in terms:
            for v in {x.name for x in subterms(t) if isinstance(x, Var)}:
                self.watch.setdefault(v, []).append(t)

    def run(self) -> Optional[dict[str, Value]]:
        for t in self.terms:
            if not any(isinstance(x, Var) for x in subterms(t)) and evaluate(t, {}) is False:
                return None
        return self._assign(0, {}, {Sort.ADDR: 0, Sort.U: 0})

    def _candidates(self, v: Var, used: dict[Sort, int]) -> list[tuple[Value, bool]]:
        if v.sort is Sort.BOOL:
            return [(True, False), (False, False)]
        out: list[tuple[Value, bool]] = [(("lit", x), False) for x in self.lits.get(v.sort, [])]
        out += [(("new", v.sort.value, k), False) for k in range(used[v.sort])]
        if used[v.sort] < self.caps[v.sort]:
            out.append((("new", v.sort.value, used[v.sort]), True))
        else:
            self.capped = True
        return out

    def _assign(self, i: int, env: dict[str, Value], used: dict[Sort, int]) -> Optional[dict[str, Value]]:
        if i == len(self.vars):
            return dict(env)
        self.steps += 1
        if self.steps % 256 == 0 and time.monotonic() > self.deadline:
            raise _Deadline()
        v = self.vars[i]
        for value, fresh in self._candidates(v, used):
            env[v.name] = value
            if all(evaluate(t, env) is not False for t in self.watch.get(v.name, ())):
                nxt = dict(used)
                if fresh:
                    nxt[v.sort] += 1
                found = self._assign(i + 1, env, nxt)
                if found is not None:
                    return found
            del env[v.name]
        return None


def _show(value: Value, offset: dict[str, int]) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value[0] == "lit":
        return str(value[1])
    _, sort, k = value
    return f"{sort.lower()}#{k + offset.get(sort, 0)}"


def solve(pcs: PathConstraintSet, timeout_ms: int = 5000, caps: Optional[dict[Sort, int]] = None) -> ReachabilityVerdict:
    caps = {**DEFAULT_CAPS, **(caps or {})}
    deadline = time.monotonic() + timeout_ms / 1000.0
    terms = ackermannize(pcs)
    lits: dict[Sort, list[str]] = {}
    for t in terms:
        for x in subterms(t):
            if isinstance(x, Lit) and x.value not in lits.setdefault(x.sort, []):
                lits[x.sort].append(x.value)
    for vs in lits.values():
        vs.sort()
    model: dict[str, str] = {}
    offset: dict[str, int] = {}
    capped = False
    try:
        for comp in _components(terms):
            search = _Search(comp, lits, caps, deadline)
            found = search.run()
            if found is None:
                if search.capped:
                    capped = True
                    continue
                return ReachabilityVerdict(Status.UNSAT, None, pcs.sequence)
            used: dict[str, int] = {}
            for name, value in found.items():
                if not name.startswith("!"):
                    model[name] = _show(value, offset)
                if isinstance(value, tuple) and value[0] == "new":
                    used[value[1]] = max(used.get(value[1], 0), value[2] + 1)
            for s, n in used.items():
                offset[s] = offset.get(s, 0) + n
    except _Deadline:
        return ReachabilityVerdict(Status.TIMEOUT, None, pcs.sequence, "builtin search exceeded its time budget")
    if capped:
        return ReachabilityVerdict(Status.UNKNOWN, None, pcs.sequence, "value domain cap reached before a model was found")
    for name in pcs.variables:
        model.setdefault(name, "*")
    return ReachabilityVerdict(Status.SAT, dict(sorted(model.items())), pcs.sequence)
