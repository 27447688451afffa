"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import json
import random
import time
from pathlib import Path

from hypothesis import HealthCheck, given, settings

from conftest import CORPUS, corpus_constraint_sets, corpus_file
from oracles import sat_by_atoms, sat_by_values, token_has_sink
from srvscan.cli import main
from srvscan.detectors.sma import KNOWN_FP_NOTE, OPAQUE_NOTE
from srvscan.oracle import Oracle
from srvscan.pipeline import analyze_file, analyze_source
from srvscan.report import findings_from_json
from srvscan.screening import corpus_screen
from test_properties import cases
from test_solver_differential import agree, random_set, variants

README = Path(__file__).resolve().parents[1] / "README.md"


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


FIGURES = [
    ("fig1_erc20withpermit", "SSMI"),
    ("fig4_biconomy", "X-CRA"),
    ("fig5_hermez", "X-PRA"),
    ("fig6_adex", "CASR"),
    ("fig7_connext", "SSMI"),
    ("fig8_interest", "SMA"),
]


def test_criterion_1_figure_corpus(capsys):
    problems = []
    slowest = 0.0
    for stem, srv in FIGURES:
        for variant in ("vulnerable", "patched"):
            t0 = time.perf_counter()
            result = analyze_file(corpus_file(f"{stem}_{variant}.sol"), Oracle())
            slowest = max(slowest, time.perf_counter() - t0)
            got = [f.srv_type for f in result.findings]
            if variant == "vulnerable" and got != [srv]:
                problems.append(f"{stem} vulnerable: {got}")
            if variant == "patched" and srv in got:
                problems.append(f"{stem} patched: {got}")
            if result.errors:
                problems.append(f"{stem} {variant}: {result.errors}")
    ok = not problems and slowest < 5.0
    verdict(capsys, 1, ok, f"slowest contract {slowest:.2f}s {'; '.join(problems)}")


def test_criterion_2_sma_property(capsys):
    oracle = Oracle()
    failures = []
    count = []

    @settings(max_examples=100, deadline=None, derandomize=True, database=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(cases())
    def check(case):
        count.append(1)
        source, v_checked, s_checked = case
        result = analyze_source(source, "generated.sol", oracle)
        present = any(f.srv_type == "SMA" for f in result.findings)
        if present != (not (v_checked and s_checked)):
            failures.append((v_checked, s_checked))

    t0 = time.perf_counter()
    check()
    elapsed = time.perf_counter() - t0
    ok = not failures and len(count) >= 100 and elapsed < 60.0
    verdict(capsys, 2, ok, f"{len(count)} cases in {elapsed:.1f}s, {len(failures)} mismatches")


def scan_json(capsys, *extra):
    code = main(["scan", str(CORPUS), "--format", "json", *extra])
    out, _ = capsys.readouterr()
    return code, out


def test_criterion_3_determinism(capsys):
    _, first = scan_json(capsys)
    _, second = scan_json(capsys)
    verdict(capsys, 3, first == second and len(first) > 0, f"{len(first)} bytes per report")


def test_criterion_4_replay_offline(capsys, tmp_path, no_network):
    transcript = tmp_path / "oracle.jsonl"
    _, recorded = scan_json(capsys, "--transcript", str(transcript))
    code, replayed = scan_json(capsys, "--oracle", "replay", "--transcript", str(transcript))
    same = findings_from_json(recorded) == findings_from_json(replayed)
    ok = same and code in (0, 1) and no_network == []
    verdict(capsys, 4, ok, f"{len(findings_from_json(replayed))} findings replayed, "
                           f"{len(no_network)} network attempts")


def test_criterion_5_solver_differential(capsys):
    t0 = time.perf_counter()
    corpus = [v for _, pcs in corpus_constraint_sets() for v in variants(pcs)]
    outcomes = [agree(pcs, sat_by_atoms(pcs)) for pcs in corpus]
    rng = random.Random(20240611)
    generated = [random_set(rng) for _ in range(50)]
    outcomes += [agree(pcs, sat_by_values(pcs.assertions)) for pcs in generated]
    elapsed = time.perf_counter() - t0
    ok = elapsed < 30.0 and all(len(p.variables) <= 4 for p in generated)
    verdict(capsys, 5, ok, f"{len(corpus)} corpus sets and {len(generated)} random sets agree "
                           f"({sum(outcomes)} SAT) in {elapsed:.1f}s")


def test_criterion_6_reachability(capsys):
    permit = analyze_file(corpus_file("fig8_interest_vulnerable.sol"), Oracle())
    guarded = analyze_file(corpus_file("interest_permit_owner_only.sol"), Oracle())
    kept = [f.reachability.status for f in permit.findings] == ["SAT"]
    suppressed = guarded.findings == [] and guarded.suppressed == 1
    verdict(capsys, 6, kept and suppressed,
            f"permit {[f.reachability.status for f in permit.findings]}, owner-only suppressed={guarded.suppressed}")


RECOVER = ("function f(bytes32 h, uint8 v, bytes32 r, bytes32 s) public pure returns (address) "
           "{{ return {call}; }}")
LIB = ("library ECDSA { function recover(bytes32 h, bytes memory sig) internal pure returns (address) "
       "{ return address(0); } function tryRecover(bytes32 h, bytes memory sig) internal pure "
       "returns (address, uint8) { return (address(0), 0); } }\n")
ASM = ("contract A {{ function f(bytes32 h, uint8 v, bytes32 r, bytes32 s) public view returns (address a) "
       "{{ assembly {{ let p := mload(0x40) mstore(p, h) let ok := staticcall(gas(), {target}, p, 128, p, 32) "
       "a := mload(p) }} }} }}")

SCREEN_FIXTURES = {
    "direct.sol": "contract A { " + RECOVER.format(call="ecrecover(h, v, r, s)") + " }",
    "library_recover.sol": LIB + "contract A { function f(bytes32 h, bytes memory sig) public pure "
                                 "returns (address) { return ECDSA.recover(h, sig); } }",
    "library_try.sol": LIB + "contract A { function f(bytes32 h, bytes memory sig) public pure "
                             "returns (address a) { (a, ) = ECDSA.tryRecover(h, sig); } }",
    "using_for.sol": LIB + "contract A { using ECDSA for bytes32; function f(bytes32 h, bytes memory sig) "
                           "public pure returns (address) { return h.recover(sig); } }",
    "assembly_one.sol": ASM.format(target="1"),
    "assembly_hex.sol": ASM.format(target="0x01"),
    "modifier.sol": "contract A { address signer; modifier signed(bytes32 h, uint8 v, bytes32 r, bytes32 s) "
                    "{ require(ecrecover(h, v, r, s) == signer); _; } function f(bytes32 h, uint8 v, bytes32 r, "
                    "bytes32 s) public signed(h, v, r, s) {} }",
    "free_function.sol": RECOVER.format(call="ecrecover(h, v, r, s)") + "\ncontract A {}",
    "helper_library.sol": "library Sig { " + RECOVER.format(call="ecrecover(h, v, r, s)").replace(
        "public", "internal") + " } contract A { function g(bytes32 h) public pure returns (address) "
                                "{ return Sig.f(h, 27, h, h); } }",
    "string_and_call.sol": 'contract A { string note = "ecrecover(h)"; '
                           + RECOVER.format(call="ecrecover(h, v, r, s)") + " }",
    "comment_only.sol": "contract A {\n    // return ecrecover(h, v, r, s);\n    function f() public {}\n}",
    "block_comment.sol": "contract A { /* ECDSA.recover(h, sig) */ function f() public {} }",
    "natspec.sol": "contract A {\n    /// @dev checks ecrecover(h, v, r, s) elsewhere\n    function f() public {}\n}",
    "string_only.sol": 'contract A { string public doc = "call ecrecover(h, v, r, s)"; }',
    "lookalike.sol": "contract A { function ecrecoverish(bytes32 h) public pure returns (bytes32) { return h; } "
                     "function g() public pure { ecrecoverish(0); } }",
    "variable_name.sol": "contract A { address public ecrecovered; function f() public { ecrecovered = msg.sender; } }",
    "other_precompile.sol": ASM.format(target="2"),
    "other_library.sol": "library Vault { function recover(uint256 x) internal pure returns (uint256) { return x; } } "
                         "contract A { function f(uint256 x) public pure returns (uint256) { return Vault.recover(x); } }",
    "event_only.sol": "contract A { event Recovered(address who); function f() public { emit Recovered(msg.sender); } }",
    "plain_token.sol": corpus_file("plain_token.sol").read_text(),
}


def test_criterion_7_screening_parity(capsys, tmp_path):
    for name, text in SCREEN_FIXTURES.items():
        (tmp_path / name).write_text(text)
    result = corpus_screen(tmp_path)
    got = sorted(p.name for p in result.matches)
    expected = sorted(name for name, text in SCREEN_FIXTURES.items() if token_has_sink(text))
    ok = (len(SCREEN_FIXTURES) == 20 and got == expected and not result.notes
          and "comment_only.sol" not in got and 0 < len(expected) < 20)
    verdict(capsys, 7, ok, f"{len(got)} of {len(SCREEN_FIXTURES)} files contain a sink; "
                           f"notes={result.notes} diff={sorted(set(got) ^ set(expected))}")


def test_criterion_8_limitations(capsys):
    faucet = analyze_file(corpus_file("unrelated_state_restriction.sol"), Oracle())
    assembly = analyze_file(corpus_file("custom_assembly_ecrecover.sol"), Oracle())
    faucet_ok = [f.srv_type for f in faucet.findings] == ["SMA"] and KNOWN_FP_NOTE in faucet.findings[0].notes
    assembly_ok = all(f.confidence == "low" and OPAQUE_NOTE in f.notes for f in assembly.findings)
    verdict(capsys, 8, faucet_ok and assembly_ok,
            f"unrelated-state faucet {[(f.srv_type, f.confidence) for f in faucet.findings]}, "
            f"custom assembly {[(f.srv_type, f.confidence) for f in assembly.findings]}")


def test_criterion_9_not_reproducible(capsys):
    text = README.read_text() if README.exists() else ""
    documented = "Not reproduced here" in text
    with capsys.disabled():
        print("\ncriterion 9: NOT REPRODUCIBLE at desk scale (population statistics, precision/recall, "
              "ablations and asset totals need the full on-chain dataset and a live model); "
              f"README section present={documented}")
    assert documented
