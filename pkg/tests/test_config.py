from pathlib import Path

import pytest

from conftest import corpus_file
from srvscan.config import ConfigError, RunConfig, from_mapping, load_file, parse_detectors, resolve
from srvscan.oracle import OracleMode
from srvscan.taint import SrvType

FIG8 = str(corpus_file("fig8_interest_vulnerable.sol"))


def test_defaults_validate():
    cfg = resolve(None, {"inputs": [FIG8]})
    assert cfg.oracle is OracleMode.HEURISTIC and cfg.solver == "builtin" and cfg.format == "text"
    assert cfg.detectors == frozenset(SrvType)


def test_file_then_flags(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("inputs: [%s]\nformat: json\njobs: 2\ndetectors: [SMA, ssmi]\n" % FIG8)
    cfg = resolve(path, {"format": "sarif", "jobs": None})
    assert cfg.format == "sarif" and cfg.jobs == 2
    assert cfg.detectors == frozenset({SrvType.SMA, SrvType.SSMI})


def test_detector_names():
    assert parse_detectors("X-CRA, xpra,CASR") == frozenset({SrvType.XCRA, SrvType.XPRA, SrvType.CASR})
    with pytest.raises(ConfigError):
        parse_detectors("SMA,REPLAY")


@pytest.mark.parametrize("flags", [
    {},
    {"inputs": ["/nonexistent/file.sol"]},
    {"inputs": [FIG8], "format": "xml"},
    {"inputs": [FIG8], "solver": "cvc"},
    {"inputs": [FIG8], "jobs": 0},
    {"inputs": [FIG8], "detectors": ""},
    {"inputs": [FIG8], "oracle": "live"},
    {"inputs": [FIG8], "oracle": "replay"},
    {"inputs": [FIG8], "oracle": "replay", "transcript": "/nonexistent.jsonl"},
    {"inputs": [FIG8], "oracle": "psychic"},
    {"inputs": [FIG8], "solver": "external", "solver_path": "/nonexistent/z3"},
    {"inputs": [FIG8], "oracle_budget": 0},
    {"inputs": [FIG8], "half_order": 0},
    {"inputs": [FIG8], "jobs": "many"},
    {"inputs": [FIG8], "pathcheck": "yes"},
    {"inputs": [FIG8], "colour": "blue"},
])
def test_invalid_configurations(flags):
    with pytest.raises(ConfigError):
        resolve(None, flags)


def test_bad_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("inputs: [unclosed\n")
    with pytest.raises(ConfigError):
        load_file(path)
    path.write_text("- a\n- b\n")
    with pytest.raises(ConfigError):
        load_file(path)
    with pytest.raises(ConfigError):
        load_file(tmp_path / "missing.yaml")


def test_half_order_override():
    cfg = from_mapping({"inputs": [FIG8], "half_order": 12345})
    assert cfg.detector_config().secp256k1_half_order == 12345


def test_oracle_key_comes_from_the_environment(monkeypatch):
    monkeypatch.setenv("SRVSCAN_ORACLE_KEY", "sk-test")
    assert RunConfig(inputs=(Path(FIG8),)).oracle_key == "sk-test"
    with pytest.raises(ConfigError):
        from_mapping({"oracle_key": "inline"})
