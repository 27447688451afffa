import shutil
import time

import pytest

from conftest import corpus_file
from srvscan.oracle import Oracle, OracleKind, OracleMode, OracleResponse, OracleTranscript
from srvscan.pipeline import (
    PHASES,
    UNREACHED_NOTE,
    Finding,
    Location,
    Options,
    analyze_file,
    analyze_source,
)

EXPECTED = {
    "fig1_erc20withpermit": ("SSMI", "transferWithSig", ("transferWithSig",)),
    "fig4_biconomy": ("X-CRA", "_validateSignature", ("handleOps", "_validateSignature")),
    "fig5_hermez": ("X-PRA", "_checkSig", ("withdraw", "_checkSig")),
    "fig6_adex": ("CASR", "execScheduled", ("execScheduled",)),
    "fig7_connext": ("SSMI", "recoverSignature", ("fulfill", "recoverSignature")),
    "fig8_interest": ("SMA", "permit", ("permit",)),
}


class Scripted(Oracle):
    """Heuristic answers, except for the sequences it is told to give."""

    def __init__(self, sequences):
        super().__init__()
        self.sequences = sequences

    def propose_function_sequences(self, warnings, slice_text):
        return OracleResponse(OracleKind.FUNCTION_SEQUENCE, dict(self.sequences), 1, "")


@pytest.mark.parametrize("stem", sorted(EXPECTED))
def test_figure_findings(stem):
    srv, short, seq = EXPECTED[stem]
    t0 = time.perf_counter()
    result = analyze_file(corpus_file(f"{stem}_vulnerable.sol"), Oracle())
    assert time.perf_counter() - t0 < 5.0
    (f,) = result.findings
    assert (f.srv_type, f.function.rsplit(".", 1)[-1]) == (srv, short)
    assert f.reachability.status == "SAT"
    assert f.reachability.sequence == seq
    assert f.reachability.model
    assert f.confidence == "high"
    assert f.sink.path.endswith(f"{stem}_vulnerable.sol") and f.sink.line > 0
    assert set(result.timings) == set(PHASES)
    patched = analyze_file(corpus_file(f"{stem}_patched.sol"), Oracle())
    assert [x for x in patched.findings if x.srv_type == srv] == []


def test_owner_only_permit_suppressed():
    result = analyze_file(corpus_file("interest_permit_owner_only.sol"), Oracle())
    assert result.findings == [] and result.suppressed == 1


def test_pathcheck_off_keeps_everything():
    result = analyze_file(corpus_file("interest_permit_owner_only.sol"), Oracle(), Options(pathcheck=False))
    (f,) = result.findings
    assert f.reachability.status == "Unchecked" and f.confidence == "high"


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
def test_external_solver_agrees():
    for name in ["fig8_interest_vulnerable.sol", "interest_permit_owner_only.sol", "fig5_hermez_vulnerable.sol"]:
        a = analyze_file(corpus_file(name), Oracle())
        b = analyze_file(corpus_file(name), Oracle(), Options(solver="external"))
        assert [(f.srv_type, f.function) for f in a.findings] == [(f.srv_type, f.function) for f in b.findings]
        assert a.suppressed == b.suppressed


def test_missing_sequence_key_defaults_to_the_function():
    result = analyze_file(corpus_file("fig8_interest_vulnerable.sol"), Scripted({}))
    (f,) = result.findings
    assert f.reachability.status == "SAT" and f.reachability.sequence == ("permit",)


def test_empty_sequence_list_keeps_finding_low():
    result = analyze_file(corpus_file("fig8_interest_vulnerable.sol"), Scripted({"permit": []}))
    (f,) = result.findings
    assert f.reachability.status == "PathNotFound"
    assert f.confidence == "low" and UNREACHED_NOTE in f.notes


def test_sequences_missing_the_function_keep_finding_low():
    result = analyze_file(corpus_file("interest_permit_owner_only.sol"), Scripted({"permit": [["transfer"]]}))
    (f,) = result.findings
    assert f.reachability.status == "PathNotFound" and f.confidence == "low"


def test_limitations():
    faucet = analyze_file(corpus_file("unrelated_state_restriction.sol"), Oracle())
    assert [f.srv_type for f in faucet.findings] == ["SMA"]
    assembly = analyze_file(corpus_file("custom_assembly_ecrecover.sol"), Oracle())
    assert all(f.confidence == "low" for f in assembly.findings)


def test_safe_library_sinks_are_skipped():
    result = analyze_file(corpus_file("eip712_permit_token.sol"), Oracle())
    assert result.findings == [] and result.errors == []


def test_parse_error_is_reported_not_fatal():
    result = analyze_source("contract {", "broken.sol", Oracle())
    assert result.errors and not result.failed and result.findings == []


def test_unreadable_file(tmp_path):
    result = analyze_file(tmp_path / "missing.sol", Oracle())
    assert "cannot read" in result.errors[0]


def test_replay_miss_fails_the_file(tmp_path):
    oracle = Oracle(OracleMode.REPLAY, OracleTranscript())
    result = analyze_file(corpus_file("fig8_interest_vulnerable.sol"), oracle)
    assert result.failed and result.findings == []


def test_slice_budget_skips_the_sink():
    result = analyze_file(corpus_file("fig5_hermez_vulnerable.sol"), Oracle(), Options(slice_budget=50))
    assert result.findings == [] and "skipped" in result.errors[0] and not result.failed


def test_constraint_dumps(tmp_path):
    analyze_file(corpus_file("fig5_hermez_vulnerable.sol"), Oracle(), Options(dump_dir=tmp_path))
    dumps = sorted(tmp_path.glob("*.smt2"))
    assert len(dumps) == 1
    assert "(check-sat)" in dumps[0].read_text()


def test_location_spans_lines():
    from conftest import unit_of
    from srvscan.frontend import Span

    unit = unit_of("contract A {\n  uint x;\n}\n")
    loc = Location.of(unit, Span("a.sol", 1, 1, 0, 14))
    assert (loc.line, loc.col, loc.end_line, loc.end_col) == (1, 1, 2, 2)
    loc = Location.of(unit, Span("a.sol", 1, 1, 0, 8))
    assert (loc.end_line, loc.end_col) == (1, 9)


def test_finding_round_trip():
    (f,) = analyze_file(corpus_file("fig8_interest_vulnerable.sol"), Oracle()).findings
    assert Finding.from_dict(f.to_dict()) == f


def test_results_are_deterministic():
    a = analyze_file(corpus_file("interest_permit_snippet.sol"), Oracle())
    b = analyze_file(corpus_file("interest_permit_snippet.sol"), Oracle())
    assert a.findings == b.findings
    assert [f.srv_type for f in a.findings] == ["SMA", "SSMI"]
