import json

import jsonschema
import pytest

from conftest import CORPUS, DATA
from srvscan.oracle import Oracle
from srvscan.pipeline import ContractResult, analyze_file
from srvscan.report import (
    RULES,
    ScanReport,
    emit_report,
    findings_from_json,
    render_json,
    render_sarif,
    render_text,
    rule_id,
)
from srvscan.taint import SrvType


@pytest.fixture(scope="module")
def report():
    oracle = Oracle()
    return ScanReport([analyze_file(p, oracle) for p in sorted(CORPUS.glob("*/*.sol"))])


@pytest.fixture(scope="module")
def sarif_schema():
    return json.loads((DATA / "sarif-2.1.0-rtm.5.json").read_text())


def test_sarif_validates(report, sarif_schema):
    doc = json.loads(render_sarif(report.findings))
    jsonschema.Draft4Validator(sarif_schema).validate(doc)
    run = doc["runs"][0]
    assert [r["id"] for r in run["tool"]["driver"]["rules"]] == [rule_id(t.value) for t in SrvType]
    assert len(run["results"]) == len(report.findings)
    for result in run["results"]:
        rule = run["tool"]["driver"]["rules"][result["ruleIndex"]]
        assert rule["id"] == result["ruleId"]
        region = result["locations"][0]["physicalLocation"]["region"]
        assert region["startLine"] >= 1 and region["startColumn"] >= 1


def test_empty_sarif_validates(sarif_schema):
    jsonschema.Draft4Validator(sarif_schema).validate(json.loads(render_sarif([])))


def test_sarif_levels_follow_confidence(report):
    doc = json.loads(render_sarif(report.findings))
    levels = {(r["properties"]["confidence"], r["level"]) for r in doc["runs"][0]["results"]}
    assert levels <= {("high", "error"), ("medium", "warning"), ("low", "note")}
    assert ("low", "note") in levels


def test_every_type_has_a_rule():
    assert set(RULES) == set(SrvType)


def test_json_is_byte_stable(report):
    oracle = Oracle()
    again = ScanReport([analyze_file(p, oracle) for p in sorted(CORPUS.glob("*/*.sol"))])
    assert render_json(report) == render_json(again)


def test_json_round_trip(report):
    text = render_json(report)
    assert findings_from_json(text) == report.findings
    doc = json.loads(text)
    assert doc["summary"]["findings"] == len(report.findings)
    assert sum(doc["summary"]["by_type"].values()) == len(report.findings)
    assert all("timings" not in f for f in doc["files"])


def test_json_timings_behind_a_flag(report):
    doc = json.loads(render_json(report, timings=True))
    assert all(set(f["timings"]) == {"parse", "slice", "detect", "pathcheck"} for f in doc["files"])


def test_text_report(report):
    text = render_text(report)
    assert text.splitlines()[0].split() == ["LOCATION", "TYPE", "FUNCTION", "CONF", "REACH"]
    assert "timing (seconds):" in text
    assert text.rstrip().endswith(f"{len(report.findings)} finding(s) in {len(report.results)} file(s)")


def test_text_report_without_findings():
    text = render_text(ScanReport([ContractResult("a.sol")]))
    assert text.startswith("no findings")


def test_findings_are_ordered(report):
    keys = [f.sort_key() for f in report.findings]
    assert keys == sorted(keys)


def test_unknown_format(report):
    with pytest.raises(ValueError):
        emit_report(report, "xml")
