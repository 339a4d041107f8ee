"""Trace replayer: registers a model and drives recorded cases over HTTP.

Each trace is a block of JSON lines (blank line between cases) starting with
the @start marker; the remaining lines name user or service tasks by element
id (or index) with their check-in payloads. Every step goes through the REST
API of an in-process gateway, so the measured costs are exactly what a
networked client would cause.

Violations (a step whose element is not an enabled task) abandon the
offending case and the replay moves on; they are listed in the report rather
than raised.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from fastapi.testclient import TestClient

from ..ledger import Ledger
from .app import create_app
from .runtime import Runtime

REPORT_VERSION = 1

_REGISTRATION_OPS = ("setElement", "linkSubprocess", "setFactory",
                     "declareRoles", "requireRole")


@dataclass
class CaseResult:
    label: str
    address: str = ""
    steps: int = 0
    cost: int = 0
    completed: bool = False
    violation: dict | None = None


@dataclass
class ReplayResult:
    model_hash: str
    report: dict = field(default_factory=dict)
    cases: list[CaseResult] = field(default_factory=list)

    @property
    def violations(self) -> list[dict]:
        return [c.violation for c in self.cases if c.violation]

    def as_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "modelHash": self.model_hash,
            "report": self.report,
            "cases": [{"label": c.label, "address": c.address,
                       "steps": c.steps, "cost": c.cost,
                       "completed": c.completed, "violation": c.violation}
                      for c in self.cases],
            "violations": self.violations,
        }


def parse_traces(text: str) -> list[list[dict]]:
    """JSONL blocks separated by blank lines; each starts with @start."""
    blocks: list[list[dict]] = []
    current: list[dict] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            if current:
                blocks.append(current)
                current = []
            continue
        try:
            event = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ValueError(f"traces line {line_no}: {exc}")
        if not isinstance(event, dict) or "element" not in event:
            raise ValueError(f"traces line {line_no}: expected an object "
                             "with an 'element' field")
        current.append(event)
    if current:
        blocks.append(current)
    for block in blocks:
        if block[0]["element"] != "@start":
            raise ValueError(f"case {block[0].get('caseRef', '?')} does not "
                             "begin with the @start marker")
    return blocks


def _mean(values: list[int]) -> float:
    return round(sum(values) / len(values), 2) if values else 0.0


def replay(model_xml: str, traces_text: str, ledger: Ledger | None = None,
           seed: int | None = None) -> tuple[ReplayResult, Ledger]:
    ledger = ledger if ledger is not None else Ledger(salt=seed or 0)
    runtime = Runtime(ledger)
    client = TestClient(create_app(runtime), raise_server_exceptions=False)

    reg_start = len(ledger.transactions)
    posted = client.post("/interpreter/models",
                         json={"xml": model_xml, "register": True})
    if posted.status_code != 201:
        detail = posted.json()
        raise ValueError(f"model rejected: {detail.get('reason', posted.text)}")
    meta = posted.json()
    root_flow = meta["rootFlow"]
    reg_txs = ledger.transactions[reg_start:]

    result = ReplayResult(model_hash=meta["modelHash"])
    instantiation_costs: list[int] = []
    for i, block in enumerate(parse_traces(traces_text), start=1):
        label = block[0].get("caseRef") or f"case-{i}"
        case = CaseResult(label=label)
        result.cases.append(case)
        created = client.post(f"/i-flow/p-cases/{root_flow}")
        if created.status_code != 201:
            case.violation = {"case": label, "element": "@start",
                              "reason": created.json().get("reason", "error")}
            continue
        case.address = created.json()["caseAddress"]
        instantiation_costs.append(created.json()["cost"])
        for step in block[1:]:
            item = _find_work_item(client, case.address, step["element"])
            if item is None:
                case.violation = {"case": label, "element": step["element"],
                                  "reason": "NOT_ENABLED"}
                break
            headers = {}
            if step.get("actor"):
                headers["X-Actor"] = step["actor"]
            done = client.patch(
                f"/i-data/{item['node']}/i-flow/{item['eInd']}",
                json={"payload": step.get("payload", {})}, headers=headers)
            if done.status_code != 200:
                case.violation = {"case": label, "element": step["element"],
                                  "reason": done.json().get("reason", "error")}
                break
            case.steps += 1
            case.cost += done.json()["cost"]
        state = client.get(f"/i-data/{case.address}").json()
        case.completed = bool(state.get("completed"))

    result.report = _cost_report(ledger, reg_txs, instantiation_costs,
                                 result.cases)
    return result, ledger


def _find_work_item(client: TestClient, case_address: str,
                    element: str) -> dict | None:
    state = client.get(f"/i-data/{case_address}")
    if state.status_code != 200:
        return None
    for item in state.json()["worklist"]:
        if item["elementId"] == element or str(item["eInd"]) == element:
            return item
    return None


def _cost_report(ledger: Ledger, reg_txs: list, instantiation_costs: list[int],
                 cases: list[CaseResult]) -> dict:
    interp_cost = 0
    for tx in ledger.transactions:
        if tx.kind == "deploy" and tx.operation == "interpreter" and tx.status == "ok":
            interp_cost = tx.cost
            break
    flow_deploy = sum(t.cost for t in reg_txs if t.status == "ok")
    element_costs = [t.cost for t in reg_txs
                     if t.operation == "setElement" and t.status == "ok"]
    clean = [c.cost for c in cases if c.violation is None and c.address]
    return {
        "interpreterDeployCost": interp_cost,
        "flowDeployCost": flow_deploy,
        "avgRegistrationCostPerElement": _mean(element_costs),
        "avgInstantiationCost": _mean(instantiation_costs),
        "avgTraceExecutionCost": _mean(clean),
    }
