import json

import pytest

from chaincase.bpmn.fixture import DEMO_TRACES, DEMO_XML, traces_jsonl
from chaincase.cli import main as cli_main
from chaincase.ledger import Ledger
from chaincase.service.replay import parse_traces, replay

LINEAR_XML = """<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             targetNamespace="http://example.test/linear">
  <process id="linear">
    <startEvent id="s"/>
    <userTask id="t"/>
    <endEvent id="e"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="t"/>
    <sequenceFlow id="f2" sourceRef="t" targetRef="e"/>
  </process>
</definitions>
"""
LINEAR_TRACES = '{"element": "@start"}\n{"element": "t"}\n'


# -- trace parsing -----------------------------------------------------------

def test_parse_traces_blocks_and_markers():
    blocks = parse_traces(traces_jsonl())
    assert len(blocks) == 3
    assert all(b[0]["element"] == "@start" for b in blocks)
    assert blocks[0][1] == {"element": "T1", "payload": {"_t1Field": True}}


def test_parse_traces_tolerates_padding():
    text = "\n\n" + traces_jsonl() + "\n\n"
    assert parse_traces(text) == parse_traces(traces_jsonl())


def test_parse_traces_rejects_bad_lines():
    with pytest.raises(ValueError, match="line 2"):
        parse_traces('{"element": "@start"}\nnot json\n')
    with pytest.raises(ValueError, match="element"):
        parse_traces('{"element": "@start"}\n[1, 2]\n')
    with pytest.raises(ValueError, match="@start"):
        parse_traces('{"element": "T1"}\n')


# -- replays -------------------------------------------------------------------

def test_fixture_replay_costs():
    result, ledger = replay(DEMO_XML, traces_jsonl())
    assert [c.completed for c in result.cases] == [True, True, True]
    assert result.violations == []
    assert [c.cost for c in result.cases] == [671425, 1119200, 671425]

    report = result.report
    assert report["interpreterDeployCost"] == 32000
    assert report["avgInstantiationCost"] == 213650.0
    assert report["avgTraceExecutionCost"] == 820683.33
    assert report["flowDeployCost"] > 0
    assert report["avgRegistrationCostPerElement"] > 0

    interpreters = [a for a, i in ledger.instances.items()
                    if i.KIND == "interpreter"]
    assert len(interpreters) == 1


def test_replay_is_deterministic():
    first, _ = replay(DEMO_XML, traces_jsonl(), seed=7)
    second, _ = replay(DEMO_XML, traces_jsonl(), seed=7)
    assert json.dumps(first.as_dict(), sort_keys=True) == \
        json.dumps(second.as_dict(), sort_keys=True)


def test_violation_abandons_case_and_replay_continues():
    shuffled = [
        [{"element": "@start", "caseRef": "broken"},
         {"element": "T2", "payload": {"_t2Field": True}},
         {"element": "T1", "payload": {"_t1Field": True}}],
        DEMO_TRACES[0],
    ]
    result, _ = replay(DEMO_XML, traces_jsonl(shuffled))
    broken, clean = result.cases
    assert broken.label == "broken"
    assert broken.violation == {"case": "broken", "element": "T2",
                                "reason": "NOT_ENABLED"}
    assert broken.steps == 0 and not broken.completed
    assert clean.completed and clean.violation is None
    assert result.violations == [broken.violation]
    # abandoned case costs are excluded from the execution average
    assert result.report["avgTraceExecutionCost"] == clean.cost


def test_unknown_payload_field_is_a_violation():
    traces = [[{"element": "@start"},
               {"element": "T1", "payload": {"bogus": 1}}]]
    result, _ = replay(DEMO_XML, traces_jsonl(traces))
    assert result.cases[0].violation["reason"] == "TYPE_ERROR"


def test_second_model_reuses_interpreter(tmp_path):
    _, ledger = replay(DEMO_XML, traces_jsonl())
    snapshot = tmp_path / "ledger.bin"
    ledger.save(str(snapshot))

    result, loaded = replay(LINEAR_XML, LINEAR_TRACES,
                            ledger=Ledger.load(str(snapshot)))
    assert result.cases[0].completed
    interpreters = [a for a, i in loaded.instances.items()
                    if i.KIND == "interpreter"]
    assert len(interpreters) == 1
    # the shared deployment is still the one the report prices
    assert result.report["interpreterDeployCost"] == 32000


# -- CLI ----------------------------------------------------------------------

def write_inputs(tmp_path, traces_text):
    model = tmp_path / "model.bpmn"
    traces = tmp_path / "traces.jsonl"
    model.write_text(DEMO_XML, encoding="utf-8")
    traces.write_text(traces_text, encoding="utf-8")
    return model, traces


def test_cli_replay_writes_all_artifacts(tmp_path, capsys):
    model, traces = write_inputs(tmp_path, traces_jsonl())
    out = tmp_path / "report.json"
    status = cli_main(["replay", "--model", str(model), "--traces",
                       str(traces), "--out", str(out)])
    assert status == 0
    captured = capsys.readouterr()
    assert "replayed 3 case(s), 0 violation(s)" in captured.out

    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["modelHash"] and len(data["cases"]) == 3

    table = (tmp_path / "report.txt").read_text(encoding="utf-8")
    assert "Interpreter deployment" in table and "32,000" in table
    csv_head = (tmp_path / "report.csv").read_text(encoding="utf-8")
    assert csv_head.splitlines()[0] == \
        "seq,origin,kind,to,operation,status,reason,cost"
    png = (tmp_path / "report.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_replay_flags_violations_in_exit_code(tmp_path):
    bad = [[{"element": "@start"}, {"element": "T2", "payload": {}}]]
    model, traces = write_inputs(tmp_path, traces_jsonl(bad))
    out = tmp_path / "report.json"
    status = cli_main(["replay", "--model", str(model), "--traces",
                       str(traces), "--out", str(out)])
    assert status == 1
    assert json.loads(out.read_text(encoding="utf-8"))["violations"]


def test_cli_fixture_dump_round_trips(tmp_path):
    target = tmp_path / "examples"
    assert cli_main(["fixture", "--dir", str(target)]) == 0
    xml = (target / "demo.bpmn").read_text(encoding="utf-8")
    assert xml == DEMO_XML
    blocks = parse_traces((target / "traces.jsonl").read_text(encoding="utf-8"))
    assert len(blocks) == 3
