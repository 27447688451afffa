import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS, unit_and_graph
from oracles import reach
from srvscan.frontend import load
from srvscan.graph import ALL_KINDS, EdgeKind, atom_node, build_ipdg, dependencies, dump_dot, dump_text

DATA = {EdgeKind.DATA}


def line_node(unit, graph, line, kind="stmt"):
    hits = [n for n in graph.nodes if graph.kind.get(n) == kind and unit.node_index[unit.origin(n)].line == line]
    assert len(hits) == 1, (line, hits)
    return hits[0]


def small_graphs():
    out = []
    for p in sorted(CORPUS.glob("*/*.sol")):
        u = load(p.read_text(), str(p))
        g = build_ipdg(u)
        if len(g.nodes) <= 30:
            out.append((p.name, g))
    assert out
    return out


def test_permit_edges():
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    pdd, digest, check, write = (line_node(u, g, n) for n in (38, 40, 41, 42))
    assert (pdd, digest, EdgeKind.DATA) in g.edges
    assert (check, write, EdgeKind.CONTROL) in g.edges


def test_edge_endpoints_exist_and_control_from_guards():
    for p in sorted(CORPUS.glob("*/*.sol")):
        u = load(p.read_text(), str(p))
        g = build_ipdg(u)
        for a, b, k in g.edges:
            assert a in g.nodes and b in g.nodes
            if k is EdgeKind.CONTROL:
                assert a in g.guards


def test_single_statement_function_has_no_edges():
    g = build_ipdg(load("contract A { function f() public { uint x = 1; } }"))
    stmts = [n for n in g.nodes if g.kind[n] == "stmt"]
    assert len(stmts) == 1
    assert not [e for e in g.edges if stmts[0] in e[:2]]


def test_domain_separator_call_reaches_chainid():
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    digest = line_node(u, g, 40)
    back = dependencies(g, {digest}, "backward", {EdgeKind.DATA, EdgeKind.CALL})
    assert atom_node("block.chainid") in back
    assert any(k is EdgeKind.CALL for _, _, k in g.edges)


def test_backward_from_check_reaches_typehash():
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    back = dependencies(g, {line_node(u, g, 41)}, "backward", DATA)
    assert {line_node(u, g, 38), line_node(u, g, 40), g.state_vars["PERMIT_TYPEHASH"]} <= back


def test_empty_start():
    _, g = unit_and_graph("fig8_interest_vulnerable.sol")
    assert dependencies(g, set(), "forward") == set()


def test_closure_matches_brute_force():
    for name, g in small_graphs():
        for n in sorted(g.nodes):
            for kinds in ({EdgeKind.DATA}, {EdgeKind.DATA, EdgeKind.CONTROL}, set(ALL_KINDS)):
                assert dependencies(g, {n}, "forward", kinds) == reach(g.edges, [n], True, kinds), name
                assert dependencies(g, {n}, "backward", kinds) == reach(g.edges, [n], False, kinds), name


def test_adjoint_exhaustive_on_small_graphs():
    for name, g in small_graphs():
        nodes = sorted(g.nodes)
        fwd = {x: dependencies(g, {x}, "forward", DATA | {EdgeKind.CONTROL}) for x in nodes}
        for size in (1, 2):
            for s in itertools.combinations(nodes, size):
                back = dependencies(g, set(s), "backward", DATA | {EdgeKind.CONTROL})
                for x in nodes:
                    assert (x in back) == bool(fwd[x] & set(s)), name


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_monotone_in_start_and_kinds(data):
    _, g = unit_and_graph("fig8_interest_vulnerable.sol")
    nodes = sorted(g.nodes)
    small = set(data.draw(st.lists(st.sampled_from(nodes), max_size=4)))
    big = small | set(data.draw(st.lists(st.sampled_from(nodes), max_size=4)))
    k1 = set(data.draw(st.lists(st.sampled_from(sorted(ALL_KINDS, key=lambda k: k.value)), max_size=3)))
    k2 = k1 | set(data.draw(st.lists(st.sampled_from(sorted(ALL_KINDS, key=lambda k: k.value)), max_size=3)))
    direction = data.draw(st.sampled_from(["forward", "backward"]))
    assert dependencies(g, small, direction, k1) <= dependencies(g, big, direction, k1)
    assert dependencies(g, small, direction, k1) <= dependencies(g, small, direction, k2)


def test_build_is_deterministic():
    for p in sorted(CORPUS.glob("*/*.sol")):
        a = build_ipdg(load(p.read_text(), str(p)))
        b = build_ipdg(load(p.read_text(), str(p)))
        assert sorted(a.nodes) == sorted(b.nodes)
        assert a.canonical_edges() == b.canonical_edges()


def test_dumps():
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    text = dump_text(g, u)
    assert "-> " in text and "[Data]" in text
    assert dump_dot(g, u).startswith("digraph")


def test_unknown_external_call_node():
    src = """interface Oracle { function price() external returns (uint); }
    contract A { Oracle o; uint p; function f() public { p = o.price(); } }"""
    g = build_ipdg(load(src))
    assert "unknown" in g.kind.values()
