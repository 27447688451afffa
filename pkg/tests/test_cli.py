import json
import subprocess
import sys

import pytest

from conftest import CORPUS, corpus_file
from srvscan.cli import main
from srvscan.report import findings_from_json

FIGURES = str(CORPUS / "figures")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_scan_exit_codes(capsys):
    assert run(capsys, "scan", str(corpus_file("plain_token.sol")))[0] == 0
    code, out, _ = run(capsys, "scan", str(corpus_file("fig8_interest_vulnerable.sol")))
    assert code == 1 and "SMA" in out


def test_scan_directory_json(capsys, no_network):
    code, out, _ = run(capsys, "scan", FIGURES, "--format", "json")
    assert code == 1
    doc = json.loads(out)
    assert doc["summary"]["files"] == 14
    assert sorted(f["srv_type"] for f in doc["findings"]) == ["CASR", "SMA", "SSMI", "SSMI", "SSMI", "X-CRA", "X-PRA"]
    assert no_network == []


def test_sarif_to_file(capsys, tmp_path):
    out = tmp_path / "r" / "scan.sarif"
    code, stdout, _ = run(capsys, "scan", "--input", FIGURES, "--format", "sarif", "-o", str(out))
    assert code == 1 and stdout == ""
    assert json.loads(out.read_text())["version"] == "2.1.0"


def test_jobs_do_not_change_the_report(capsys):
    serial = run(capsys, "scan", str(CORPUS), "--format", "json")[1]
    parallel = run(capsys, "scan", str(CORPUS), "--format", "json", "--jobs", "4")[1]
    assert serial == parallel


def test_record_then_replay_offline(capsys, tmp_path, no_network):
    transcript = tmp_path / "oracle.jsonl"
    _, recorded, _ = run(capsys, "scan", FIGURES, "--format", "json", "--transcript", str(transcript))
    code, replayed, _ = run(capsys, "scan", FIGURES, "--format", "json", "--oracle", "replay",
                            "--transcript", str(transcript))
    assert code == 1
    assert findings_from_json(replayed) == findings_from_json(recorded)
    assert no_network == []


def test_replay_miss_is_an_error(capsys, tmp_path):
    transcript = tmp_path / "oracle.jsonl"
    run(capsys, "scan", str(corpus_file("fig5_hermez_vulnerable.sol")), "--transcript", str(transcript))
    code, _, err = run(capsys, "scan", str(corpus_file("fig8_interest_vulnerable.sol")),
                       "--oracle", "replay", "--transcript", str(transcript))
    assert code == 2 and "oracle failed" in err
    code, _, _ = run(capsys, "scan", str(corpus_file("fig8_interest_vulnerable.sol")),
                     "--oracle", "replay", "--transcript", str(transcript), "--replay-fallback")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["scan"],
    ["scan", "/nonexistent.sol"],
    ["scan", FIGURES, "--oracle", "live"],
    ["scan", FIGURES, "--detectors", "SMA,BOGUS"],
    ["scan", FIGURES, "--jobs", "0"],
    ["scan", FIGURES, "--format", "xml"],
    ["frobnicate"],
])
def test_invalid_invocations(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(f"inputs: [{FIGURES}]\ndetectors: SMA\nformat: json\n")
    code, out, _ = run(capsys, "scan", "--config", str(cfg))
    assert code == 1
    assert [f["srv_type"] for f in json.loads(out)["findings"]] == ["SMA"]
    cfg.write_text("inputs: [x]\nunknown_key: 1\n")
    assert run(capsys, "scan", "--config", str(cfg))[0] == 2


def test_detector_subset_and_no_pathcheck(capsys):
    code, out, _ = run(capsys, "scan", str(corpus_file("interest_permit_owner_only.sol")),
                       "--no-pathcheck", "--format", "json")
    (f,) = json.loads(out)["findings"]
    assert code == 1 and f["reachability"]["status"] == "Unchecked"
    code, _, _ = run(capsys, "scan", str(corpus_file("fig8_interest_vulnerable.sol")), "--detectors", "SSMI")
    assert code == 0


def test_debug_dumps(capsys, tmp_path):
    run(capsys, "scan", str(corpus_file("fig8_interest_vulnerable.sol")), "--debug-dumps", str(tmp_path))
    assert list(tmp_path.glob("*.smt2"))


def test_parse_errors_do_not_change_the_exit_code(capsys, tmp_path):
    (tmp_path / "broken.sol").write_text("contract {")
    (tmp_path / "ok.sol").write_text(corpus_file("plain_token.sol").read_text())
    code, _, err = run(capsys, "scan", str(tmp_path))
    assert code == 0 and "broken.sol" in err


def test_screen(capsys):
    code, out, _ = run(capsys, "screen", str(CORPUS))
    lines = out.splitlines()
    assert code == 0 and len(lines) == 19
    assert not any(line.endswith("plain_token.sol") for line in lines)
    code, out, _ = run(capsys, "screen", str(CORPUS), "--format", "json")
    assert json.loads(out)["matches"] == lines
    assert run(capsys, "screen", "/nonexistent")[0] == 2


def test_fetch_without_endpoint(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("SRVSCAN_EXPLORER_URL", raising=False)
    listing = tmp_path / "addresses.txt"
    listing.write_text("# one per line\n0x" + "ab" * 20 + "\n")
    code, out, _ = run(capsys, "fetch", "--addresses-file", str(listing), "--cache-dir", str(tmp_path / "c"))
    assert code == 2 and out.startswith("error 0x" + "ab" * 20)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "srvscan", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("srvscan ")
