"""Built-in demo model and traces.

A compact order-style process that exercises most runtime features: parallel
split/join, user and script tasks, an embedded sub-process with an exclusive
data-driven choice, an interrupting error boundary and a repair sub-process
behind it. The CLI can dump these files so there is a runnable example
without authoring a document first.

Topology (element indexes in parentheses, edges numbered in document order):

    E1(1) -> T1(2) -> G1(3) =: T2(4), T3(5) :=> G2(6) -> S1(8) -> E2(9)
    S1 error boundary B1(7) -> S2(10) -> E3(11)
    S1 body: start -> U1 -> X1 -> okEnd | errEnd(ERR1)
    S2 body: start -> script -> end
"""

from __future__ import annotations

import json
import os

DEMO_XML = """<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             id="demo-definitions"
             targetNamespace="http://example.com/demo">
  <error id="errDef1" errorCode="ERR1"/>
  <process id="demo" name="Order handling" isExecutable="true">
    <documentation>bool t1Field; bool t2Field;</documentation>
    <startEvent id="E1" name="received"/>
    <userTask id="T1" name="capture">
      <documentation>() : (bool _t1Field) -> {t1Field = _t1Field;}</documentation>
    </userTask>
    <parallelGateway id="G1"/>
    <userTask id="T2" name="review">
      <documentation>(bool t1Field) : (bool _t2Field) -> {t2Field = _t2Field;}</documentation>
    </userTask>
    <scriptTask id="T3" name="log">
      <script>t1Field = t1Field;</script>
    </scriptTask>
    <parallelGateway id="G2"/>
    <boundaryEvent id="B1" attachedToRef="S1">
      <errorEventDefinition errorRef="errDef1"/>
    </boundaryEvent>
    <subProcess id="S1" name="approve">
      <documentation>bool ok;</documentation>
      <startEvent id="S1_start"/>
      <userTask id="U1" name="decide">
        <documentation>() : (bool _ok) -> {ok = _ok;}</documentation>
      </userTask>
      <exclusiveGateway id="X1" default="S1_f4"/>
      <endEvent id="S1_okEnd"/>
      <endEvent id="S1_errEnd">
        <errorEventDefinition errorRef="errDef1"/>
      </endEvent>
      <sequenceFlow id="S1_f1" sourceRef="S1_start" targetRef="U1"/>
      <sequenceFlow id="S1_f2" sourceRef="U1" targetRef="X1"/>
      <sequenceFlow id="S1_f3" sourceRef="X1" targetRef="S1_okEnd">
        <conditionExpression>ok</conditionExpression>
      </sequenceFlow>
      <sequenceFlow id="S1_f4" sourceRef="X1" targetRef="S1_errEnd"/>
    </subProcess>
    <endEvent id="E2" name="done"/>
    <subProcess id="S2" name="repair">
      <documentation>int retries;</documentation>
      <startEvent id="S2_start"/>
      <scriptTask id="S2_script">
        <script>retries = retries + 1;</script>
      </scriptTask>
      <endEvent id="S2_end"/>
      <sequenceFlow id="S2_f1" sourceRef="S2_start" targetRef="S2_script"/>
      <sequenceFlow id="S2_f2" sourceRef="S2_script" targetRef="S2_end"/>
    </subProcess>
    <endEvent id="E3" name="repaired"/>
    <sequenceFlow id="f1" sourceRef="E1" targetRef="T1"/>
    <sequenceFlow id="f2" sourceRef="T1" targetRef="G1"/>
    <sequenceFlow id="f3" sourceRef="G1" targetRef="T2"/>
    <sequenceFlow id="f4" sourceRef="G1" targetRef="T3"/>
    <sequenceFlow id="f5" sourceRef="T2" targetRef="G2"/>
    <sequenceFlow id="f6" sourceRef="T3" targetRef="G2"/>
    <sequenceFlow id="f7" sourceRef="G2" targetRef="S1"/>
    <sequenceFlow id="f8" sourceRef="S1" targetRef="E2"/>
    <sequenceFlow id="f9" sourceRef="B1" targetRef="S2"/>
    <sequenceFlow id="f10" sourceRef="S2" targetRef="E3"/>
  </process>
</definitions>
"""

# one trace per case: the approve path, the error-repair path, and the
# approve path again with opposite data
DEMO_TRACES = [
    [
        {"element": "@start"},
        {"element": "T1", "payload": {"_t1Field": True}},
        {"element": "T2", "payload": {"_t2Field": True}},
        {"element": "U1", "payload": {"_ok": True}},
    ],
    [
        {"element": "@start"},
        {"element": "T1", "payload": {"_t1Field": True}},
        {"element": "T2", "payload": {"_t2Field": True}},
        {"element": "U1", "payload": {"_ok": False}},
    ],
    [
        {"element": "@start"},
        {"element": "T1", "payload": {"_t1Field": False}},
        {"element": "T2", "payload": {"_t2Field": False}},
        {"element": "U1", "payload": {"_ok": True}},
    ],
]


def traces_jsonl(traces=None) -> str:
    """Serialize traces as JSON lines, cases separated by a blank line."""
    blocks = []
    for case in (traces if traces is not None else DEMO_TRACES):
        blocks.append("\n".join(json.dumps(step) for step in case))
    return "\n\n".join(blocks) + "\n"


def write_examples(directory: str) -> dict[str, str]:
    """Dump the demo model and traces; returns the written paths."""
    os.makedirs(directory, exist_ok=True)
    model_path = os.path.join(directory, "demo.bpmn")
    traces_path = os.path.join(directory, "traces.jsonl")
    with open(model_path, "w", encoding="utf-8") as fh:
        fh.write(DEMO_XML)
    with open(traces_path, "w", encoding="utf-8") as fh:
        fh.write(traces_jsonl())
    return {"model": model_path, "traces": traces_path}
