import pytest

from conftest import CORPUS, contexts
from srvscan.detectors import DetectorConfig, detect_all
from srvscan.detectors.sma import KNOWN_FP_NOTE, OPAQUE_NOTE
from srvscan.taint import SrvType


def warnings(name_or_text, config=None):
    return [w for ctx in contexts(name_or_text, config) for w in detect_all(ctx)]


def types(name_or_text, config=None):
    return sorted(w.srv_type.value for w in warnings(name_or_text, config))


FIGURES = {
    "fig1_erc20withpermit": ("SSMI", "ERC20withPermit.transferWithSig"),
    "fig2_signatureclaimed": ("SSMI", "Airdrop.claim"),
    "fig4_biconomy": ("X-CRA", "SmartAccount._validateSignature"),
    "fig5_hermez": ("X-PRA", "Hermez._checkSig"),
    "fig6_adex": ("CASR", "IdentityScheduler.execScheduled"),
    "fig7_connext": ("SSMI", "TransactionManager.recoverSignature"),
    "fig8_interest": ("SMA", "InterestProtocol.permit"),
}


@pytest.mark.parametrize("stem", sorted(FIGURES))
def test_vulnerable_figure(stem):
    srv, function = FIGURES[stem]
    ws = warnings(f"{stem}_vulnerable.sol")
    assert [(w.srv_type.value, w.function) for w in ws] == [(srv, function)]
    assert ws[0].confidence == "high"


@pytest.mark.parametrize("stem", sorted(FIGURES))
def test_patched_figure(stem):
    assert warnings(f"{stem}_patched.sol") == []


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*/*.sol")), ids=lambda p: p.name)
def test_evidence_inside_warning_nodes(path):
    for ctx in contexts(path.name):
        for w in detect_all(ctx):
            assert ctx.sink in w.evidence
            assert w.evidence <= ctx.warning_nodes | {ctx.sink}


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*/*.sol")), ids=lambda p: p.name)
def test_detectors_are_idempotent(path):
    for ctx in contexts(path.name):
        assert detect_all(ctx) == detect_all(ctx)


def test_faucet_keeps_sma_with_known_fp_note():
    (w,) = warnings("unrelated_state_restriction.sol")
    assert w.srv_type is SrvType.SMA
    assert KNOWN_FP_NOTE in w.notes
    assert not any(n.startswith("v is") for n in w.notes)


def test_custom_assembly_is_low_and_opaque():
    (w,) = warnings("custom_assembly_ecrecover.sol")
    assert w.srv_type is SrvType.SMA
    assert w.confidence == "low"
    assert OPAQUE_NOTE in w.notes


def test_disabled_detectors_stay_silent():
    only_ssmi = DetectorConfig(enabled=frozenset({SrvType.SSMI}))
    assert types("fig8_interest_vulnerable.sol", only_ssmi) == []
    assert types("interest_permit_snippet.sol", only_ssmi) == ["SSMI"]


def test_half_order_must_be_in_range():
    with pytest.raises(ValueError):
        DetectorConfig(secp256k1_half_order=0)


HALF = "0x7FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF5D576E7357A4501DDFE92F46681B20A0"


def recover(checks, extra_state="", key="hash"):
    return f"""
pragma solidity ^0.8.0;
contract C {{
    mapping(bytes32 => bool) public used;
    {extra_state}
    function f(bytes32 hash, uint8 v, bytes32 r, bytes32 s) external returns (address) {{
        {checks}
        require(!used[{key}]);
        used[{key}] = true;
        return ecrecover(keccak256(abi.encode(hash, block.chainid, address(this))), v, r, s);
    }}
}}
"""


def test_both_ranges_checked():
    src = recover(f"require(v == 27 || v == 28); require(uint256(s) <= {HALF});")
    assert types(src) == []


def test_only_v_checked():
    (w,) = warnings(recover("require(v == 27 || v == 28);"))
    assert w.srv_type is SrvType.SMA
    assert any(n.startswith("s is") for n in w.notes)
    assert not any(n.startswith("v is") for n in w.notes)


def test_zero_one_encoding_is_not_a_range_check():
    (w,) = warnings(recover(f"require(v == 0 || v == 1); require(uint256(s) <= {HALF});"))
    assert any("0/1 encoding" in n for n in w.notes)


def test_half_order_bound_must_be_exact():
    loose = "0x7FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF5D576E7357A4501DDFE92F46681B20A1"
    assert types(recover(f"require(v == 27 || v == 28); require(uint256(s) <= {loose});")) == ["SMA"]


def test_unchecked_replay_state():
    src = recover(f"require(v == 27 || v == 28); require(uint256(s) <= {HALF});").replace(
        "require(!used[hash]);", "")
    assert types(src) == ["SSMI"]


def test_chain_id_missing():
    src = recover(f"require(v == 27 || v == 28); require(uint256(s) <= {HALF});").replace(
        "block.chainid, ", "")
    assert types(src) == ["X-CRA"]


def test_contract_address_missing():
    src = recover(f"require(v == 27 || v == 28); require(uint256(s) <= {HALF});").replace(
        ", address(this)", "")
    assert types(src) == ["X-PRA"]
