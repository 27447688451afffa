import pytest

from conftest import CORPUS
from oracles import token_has_sink
from srvscan.screening import corpus_screen, has_sink


def test_corpus_screen_matches_token_oracle():
    result = corpus_screen(CORPUS)
    expected = sorted(p for p in CORPUS.rglob("*.sol") if token_has_sink(p.read_text()))
    assert result.matches == expected
    assert not any(p.name == "plain_token.sol" for p in result.matches)


@pytest.mark.parametrize("text,expected", [
    ("contract A { function f(bytes32 h, uint8 v, bytes32 r, bytes32 s) public pure returns (address) "
     "{ return ecrecover(h, v, r, s); } }", True),
    ("contract A { // ecrecover(h, v, r, s)\n function f() public {} }", False),
    ("contract A { /* ECDSA.recover(h, sig) */ }", False),
    ('contract A { string s = "ecrecover(h, v, r, s)"; }', False),
    ("contract A { function ecrecoverish() public {} function g() public { ecrecoverish(); } }", False),
])
def test_has_sink(text, expected):
    assert has_sink(text) is expected
    assert token_has_sink(text) is expected


def test_unparseable_files_are_noted(tmp_path):
    (tmp_path / "ok.sol").write_text(
        "contract A { function f(bytes32 h, uint8 v, bytes32 r, bytes32 s) public pure returns (address) "
        "{ return ecrecover(h, v, r, s); } }")
    (tmp_path / "broken.sol").write_text("contract {")
    (tmp_path / "latin1.sol").write_bytes(b"contract \xff {}")
    result = corpus_screen(tmp_path)
    assert [p.name for p in result.matches] == ["ok.sol"]
    assert len(result.notes) == 2


def test_missing_root(tmp_path):
    with pytest.raises(FileNotFoundError):
        corpus_screen(tmp_path / "absent")
