"""Generated SMA cases: a finding appears exactly when v or s goes unchecked."""

import time

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from srvscan.oracle import Oracle
from srvscan.pipeline import analyze_source

HALF = "0x7FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF5D576E7357A4501DDFE92F46681B20A0"
LOOSE = "0x7FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF5D576E7357A4501DDFE92F46681B20A1"

V_CHECKS = [
    "require({v} == 27 || {v} == 28);",
    "if ({v} != 27 && {v} != 28) revert();",
    "require({v} >= 27 && {v} <= 28);",
    'require({v} == 28 || {v} == 27, "bad v");',
]
V_DECOYS = [
    "require({v} == 0 || {v} == 1);",
    "require({v} >= 27);",
    "require({v} != 0);",
]
S_CHECKS = [
    "require(uint256({s}) <= HALF_ORDER);",
    "if (uint256({s}) > " + HALF + ") revert();",
    "require(uint256({s}) < HALF_ORDER + 1);",
    'if (uint256({s}) > HALF_ORDER) {{ revert("s"); }}',
]
S_DECOYS = [
    "require(uint256({s}) <= " + LOOSE + ");",
    "require(uint256({s}) != 0);",
    "require({s} != {r});",
]

NAMES = st.sampled_from([("v", "r", "s"), ("sigV", "sigR", "sigS"), ("_v", "_r", "_s")])


@st.composite
def cases(draw):
    v, r, s = draw(NAMES)
    v_checked = draw(st.booleans())
    s_checked = draw(st.booleans())
    stmts = []
    if v_checked:
        stmts.append(draw(st.sampled_from(V_CHECKS)))
    elif draw(st.booleans()):
        stmts.append(draw(st.sampled_from(V_DECOYS)))
    if s_checked:
        stmts.append(draw(st.sampled_from(S_CHECKS)))
    elif draw(st.booleans()):
        stmts.append(draw(st.sampled_from(S_DECOYS)))
    if draw(st.booleans()):
        stmts.append("counter += 1;")
    stmts = draw(st.permutations(stmts))
    body = "\n        ".join(x.format(v=v, r=r, s=s) for x in stmts)
    source = f"""pragma solidity ^0.8.0;
contract Generated {{
    uint256 constant HALF_ORDER = {HALF};
    uint256 public counter;
    mapping(bytes32 => bool) public used;

    function go(bytes32 h, uint8 {v}, bytes32 {r}, bytes32 {s}) external returns (address) {{
        {body}
        require(!used[h]);
        used[h] = true;
        return ecrecover(keccak256(abi.encode(h, block.chainid, address(this))), {v}, {r}, {s});
    }}
}}
"""
    return source, v_checked, s_checked


ORACLE = Oracle()
STARTED = []


@settings(max_examples=100, deadline=None, derandomize=True,
          suppress_health_check=[HealthCheck.too_slow])
@given(cases())
def test_sma_iff_a_check_is_missing(case):
    if not STARTED:
        STARTED.append(time.perf_counter())
    source, v_checked, s_checked = case
    result = analyze_source(source, "generated.sol", ORACLE)
    assert result.errors == []
    sma = [f for f in result.findings if f.srv_type == "SMA"]
    assert bool(sma) == (not (v_checked and s_checked))
    assert [f.srv_type for f in result.findings if f.srv_type != "SMA"] == []
    assert time.perf_counter() - STARTED[0] < 60.0
