import pytest

from conftest import unit_and_graph
from srvscan.frontend import load, locate_sinks
from srvscan.graph import build_ipdg
from srvscan.oracle import Oracle
from srvscan.slicer import BudgetExceeded, function_level_slice, initial_code_block

SEVEN = """
contract S {
    uint public fee;
    uint public other;
    function a() public view returns (uint) { return fee + 1; }
    function b() public view returns (uint) { return other; }
    function c() public view returns (uint) { return fee * 2; }
    function d() public { other = 3; }
    function e() public view returns (uint) { uint x = fee; return x; }
    function g() public pure returns (uint) { return 7; }
    function check(bytes32 h, uint8 v, bytes32 r, bytes32 s) public pure returns (address) {
        return ecrecover(h, v, r, s);
    }
}
"""


def _seed(name_or_text):
    u, g = unit_and_graph(name_or_text)
    sites = locate_sinks(u)
    return u, g, sites, initial_code_block(g, u, sites[0])


def test_interest_initial_block():
    u, g, _, sl = _seed("fig8_interest_vulnerable.sol")
    assert set(sl.functions) == {"InterestProtocol.permit", "InterestProtocol.DOMAIN_SEPARATOR",
                                 "InterestProtocol.getChainid"}
    assert "PERMIT_TYPEHASH" in sl.state_vars


def test_lone_function_slice():
    u, g, _, sl = _seed(SEVEN)
    assert sl.functions == ["S.check"]
    assert sl.state_vars == []


def test_key_var_pulls_exactly_its_readers():
    u, g, sites, seed = _seed(SEVEN)
    sl = function_level_slice(g, u, ["fee"], seed)
    # brute-force: scan each function's body text for the identifier
    readers = set()
    for c in u.contracts:
        for fn in c.functions:
            body = u.span_text(fn.body.id) if fn.body else ""
            if "fee" in body.replace("fee =", ""):
                readers.add(fn.qualified_name)
    assert set(sl.functions) - {"S.check"} == readers == {"S.a", "S.c", "S.e"}


def test_empty_key_vars_is_noop():
    u, g, _, seed = _seed("fig8_interest_vulnerable.sol")
    assert function_level_slice(g, u, [], seed) is seed


def test_slice_is_fixed_point():
    u, g, sites, seed = _seed("fig8_interest_vulnerable.sol")
    keys = Oracle().extract_key_variables(seed.text).payload
    once = function_level_slice(g, u, keys, seed)
    twice = function_level_slice(g, u, keys, once)
    assert twice.functions == once.functions and twice.text == once.text


def test_sink_function_always_included_and_text_ordered():
    u, g, _, sl = _seed("fig8_interest_vulnerable.sol")
    assert sl.sink_function in sl.functions
    text = sl.text
    assert text.index("getChainid") < text.index("DOMAIN_SEPARATOR") < text.index("function permit")


def test_shared_helper_in_both_slices():
    src = """contract H {
        function helper() internal view returns (uint) { return block.chainid; }
        function one(uint8 v, bytes32 r, bytes32 s) public view returns (address) {
            return ecrecover(keccak256(abi.encode(helper())), v, r, s); }
        function two(uint8 v, bytes32 r, bytes32 s) public view returns (address) {
            return ecrecover(keccak256(abi.encode(helper(), 1)), v, r, s); }
    }"""
    u = load(src)
    g = build_ipdg(u)
    a, b = (initial_code_block(g, u, s) for s in locate_sinks(u))
    assert "H.helper" in a.functions and "H.helper" in b.functions
    assert ("H.one" in a.functions) != ("H.one" in b.functions)


def test_budget_drops_far_functions_then_fails():
    u, g, sites, seed = _seed("fig8_interest_vulnerable.sol")
    small = len(u.span_text(g.functions["InterestProtocol.permit"].id)) + 400
    sl = initial_code_block(g, u, sites[0], budget=small)
    assert sl.omitted and "InterestProtocol.permit" in sl.functions
    assert len(sl.text) <= small
    with pytest.raises(BudgetExceeded):
        initial_code_block(g, u, sites[0], budget=50)
