from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import unit_and_graph
from oracles import reach, reach_avoiding
from srvscan.frontend import load
from srvscan.graph import EdgeKind, atom_node, build_ipdg, dependencies
from srvscan.taint import (
    TAINT_KINDS,
    SrvType,
    collect_warning_nodes,
    default_sources,
    make_warning,
    propagate,
    source_nodes,
)

TWELVE = """
contract T {
    uint a; uint b; uint c;
    function f(uint x) public {
        uint y = x + 1;
        uint z = y * 2;
        if (z > 3) { a = z; }
        b = a + block.timestamp;
        c = b;
        uint w = c;
        a = w;
    }
}
"""


def _line(u, g, line):
    return next(n for n in g.nodes if g.kind[n] == "stmt" and u.node_index[u.origin(n)].line == line)


def test_chainid_reaches_digest():
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    st_ = propagate(g, {"block.chainid"})
    assert st_.is_tainted(_line(u, g, 40), "block.chainid")


def test_no_sources_no_taint():
    _, g = unit_and_graph("fig8_interest_vulnerable.sol")
    assert propagate(g, set()).tainted == {}


def test_cut_matches_brute_force():
    u = load(TWELVE)
    g = build_ipdg(u)
    cut = _line(u, g, 6)
    sources = {"param:T.f.x", "block.timestamp"}
    state = propagate(g, sources, {SrvType.SSMI: [cut]}, SrvType.SSMI)
    origins = set().union(*(source_nodes(g, s) for s in sources))
    expected = reach_avoiding(g.edges, origins, {cut}, set(TAINT_KINDS))
    assert set(state.tainted) == expected
    assert (cut, SrvType.SSMI) in state.sanitized_cuts


def test_cuts_for_other_types_are_ignored():
    u = load(TWELVE)
    g = build_ipdg(u)
    cut = _line(u, g, 6)
    a = propagate(g, {"param:T.f.x"}, {SrvType.SMA: [cut]}, SrvType.SSMI)
    b = propagate(g, {"param:T.f.x"})
    assert a.tainted == b.tainted


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_removing_a_cut_never_shrinks(data):
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    nodes = sorted(n for n in g.nodes if g.kind[n] == "stmt")
    cuts = set(data.draw(st.lists(st.sampled_from(nodes), max_size=4)))
    fewer = set(data.draw(st.lists(st.sampled_from(sorted(cuts) or nodes), max_size=2))) & cuts
    srcs = default_sources(g)
    big = propagate(g, srcs, {SrvType.SMA: cuts}, SrvType.SMA)
    small = propagate(g, srcs, {SrvType.SMA: cuts - fewer}, SrvType.SMA)
    assert set(big.tainted) <= set(small.tainted)
    for n, labels in big.tainted.items():
        assert labels <= small.tainted[n]


def test_public_params_are_sources():
    u, g = unit_and_graph("fig8_interest_vulnerable.sol")
    srcs = default_sources(g)
    assert "param:InterestProtocol.permit.v" in srcs
    assert not any(s.startswith("param:InterestProtocol.getChainid") for s in srcs)


def test_collect_warning_nodes():
    u, g = unit_and_graph("unrelated_state_restriction.sol")
    check = _line(u, g, 18)
    nodes = collect_warning_nodes(g, {check})
    assert _line(u, g, 19) in nodes
    assert nodes == dependencies(g, {check}, "forward", TAINT_KINDS)
    assert collect_warning_nodes(g, set()) == set()


def test_nonce_def_reaches_guard_and_increment():
    u, g = unit_and_graph("eip712_permit_token.sol")
    nonces = g.state_vars["_nonces"]
    nodes = collect_warning_nodes(g, {nonces})
    readers = {n for n in g.nodes if g.kind[n] == "stmt" and "_nonces" in g.uses.get(n, ())}
    assert readers and readers <= nodes
    assert nodes == reach(g.edges, [nonces], True, set(TAINT_KINDS))


def test_warning_confidence_follows_opaque_evidence():
    u, g = unit_and_graph("custom_assembly_ecrecover.sol")
    opaque = next(n for n, s in g.stmt.items() if type(s).__name__ == "Opaque")
    plain = next(n for n in g.nodes if g.kind[n] == "stmt" and n != opaque)
    assert make_warning(g, "f", SrvType.SMA, {opaque}, plain).confidence == "low"
    assert make_warning(g, "f", SrvType.SMA, set(), plain).confidence == "high"
    assert atom_node("block.chainid") < 0
