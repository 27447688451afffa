"""Inheritance resolution: C3 linearization, function tables, modifier inlining."""

from __future__ import annotations

import copy
import dataclasses

from .ast import (
    AstUnit,
    Block,
    ContractDef,
    FunctionDef,
    InlinedModifier,
    LocalVar,
    ModifierDef,
    Node,
    Placeholder,
    VarDecl,
    walk,
)


class CycleError(Exception):
    pass


def linearize(contracts: dict[str, ContractDef], name: str) -> list[str]:
    """C3 linearization, most-derived first.  Unknown bases are skipped."""
    memo: dict[str, list[str]] = {}

    def lin(n: str, stack: tuple[str, ...]) -> list[str]:
        if n in stack:
            raise CycleError(" -> ".join(stack + (n,)))
        if n in memo:
            return memo[n]
        c = contracts[n]
        # Solidity lists bases from "most base-like" to "most derived"
        bases = [b.name.rsplit(".", 1)[-1] for b in c.bases]
        bases = [b for b in bases if b in contracts]
        seqs = [list(lin(b, stack + (n,))) for b in reversed(bases)]
        seqs.append(list(reversed(bases)))
        out = [n]
        while True:
            seqs = [s for s in seqs if s]
            if not seqs:
                break
            for s in seqs:
                head = s[0]
                if not any(head in other[1:] for other in seqs):
                    break
            else:
                raise CycleError(f"inconsistent linearization for {n}")
            out.append(head)
            for s in seqs:
                if s and s[0] == head:
                    del s[0]
        memo[n] = out
        return out

    return lin(name, ())


def resolve_inheritance(unit: AstUnit) -> AstUnit:
    """Return a copy of ``unit`` with function tables filled in and modifier
    bodies expanded into each function that invokes them.

    Running it again on its own output changes nothing.
    """
    out = copy.deepcopy(unit)
    by_name = {c.name: c for c in out.contracts}
    for c in out.contracts:
        c.linearization = linearize(by_name, c.name)
        c.unresolved_bases = [
            b.name for b in c.bases if b.name.rsplit(".", 1)[-1] not in by_name
        ]
        table: dict[str, FunctionDef] = {}
        for base in reversed(c.linearization):
            for fn in by_name[base].functions:
                if fn.kind == "constructor" and base != c.name:
                    continue
                table[fn.signature] = fn
        c.function_table = dict(sorted(table.items()))

    if not out.resolved:
        for c in out.contracts:
            mods: dict[str, ModifierDef] = {}
            for base in reversed(c.linearization):
                for m in by_name[base].modifiers:
                    mods[m.name] = m
            for fn in c.functions:
                _inline_modifiers(out, fn, mods, set(c.linearization))
        out.resolved = True
    return out


def _inline_modifiers(unit: AstUnit, fn: FunctionDef, mods: dict[str, ModifierDef], bases: set[str]) -> None:
    if fn.modifiers_inlined or fn.body is None:
        fn.modifiers_inlined = True
        return
    body: Block = fn.body
    for inv in reversed(fn.modifiers):
        name = inv.name.rsplit(".", 1)[-1]
        if name in bases or name not in mods or mods[name].body is None:
            # base constructor call or unknown modifier
            continue
        mod = mods[name]
        mbody = _clone(unit, mod.body)
        bindings: list[VarDecl] = []
        for k, p in enumerate(mod.params):
            if p.name is None:
                continue
            arg = inv.args[k] if inv.args and k < len(inv.args) else None
            arg_clone = _clone(unit, arg) if arg is not None else None
            var = LocalVar(_fresh(unit, p.id), p.name, p.type_name, p.location)
            bindings.append(VarDecl(_fresh(unit, inv.id), [var], arg_clone))
        _substitute_placeholder(unit, mbody, body)
        wrapper = InlinedModifier(_fresh(unit, inv.id), name, bindings, mbody, mod.id)
        body = Block(_fresh(unit, body.id), [wrapper])
    fn.body = body
    fn.modifiers_inlined = True


def _fresh(unit: AstUnit, origin: int) -> int:
    nid = unit.next_id
    unit.next_id += 1
    root = unit.clone_origin.get(origin, origin)
    unit.clone_origin[nid] = root
    unit.node_index[nid] = unit.node_index[root]
    return nid


def _clone(unit: AstUnit, node: Node) -> Node:
    twin = copy.deepcopy(node)
    for n in walk(twin):
        n.id = _fresh(unit, n.id)
    return twin


def _substitute_placeholder(unit: AstUnit, root: Node, inner: Block) -> None:
    """Replace each ``_;`` in ``root`` by ``inner`` (cloned after the first use)."""
    used = False

    def visit(node: Node) -> None:
        nonlocal used
        for f in dataclasses.fields(node):
            val = getattr(node, f.name)
            if isinstance(val, Placeholder):
                setattr(node, f.name, _use())
            elif isinstance(val, list):
                for k, item in enumerate(val):
                    if isinstance(item, Placeholder):
                        val[k] = _use()
                    elif isinstance(item, Node):
                        visit(item)
            elif isinstance(val, Node):
                visit(val)

    def _use() -> Block:
        nonlocal used
        if not used:
            used = True
            return inner
        return _clone(unit, inner)

    visit(root)
