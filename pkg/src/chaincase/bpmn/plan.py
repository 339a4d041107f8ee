"""Registration plans: from a parsed model to contracts on the ledger.

A plan is a flat, JSON-able list of steps with symbolic references
("flow:<scope>", "factory:<scope>") instead of addresses, so the same plan
can be executed against any ledger, re-executed for repair, or inspected
offline. Step order respects registration constraints: elements before the
attached events that point at them, every element before its sub-process
link, flows before factories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import codec
from ..ledger import Ledger, TxReceipt
from .model import ParsedModel, ParsedScope

_BP_INDEXED = ("scripts", "gateways", "checkins", "checkouts", "roles")


def flow_ref(scope_id: str) -> str:
    return f"flow:{scope_id}"


def factory_ref(scope_id: str) -> str:
    return f"factory:{scope_id}"


def build_plan(parsed: ParsedModel) -> dict:
    steps: list[dict] = []
    order = list(parsed.scopes)
    for sid in order:
        steps.append({"op": "deployFlow", "ref": flow_ref(sid)})
    for sid in order:
        scope = parsed.scopes[sid]
        plain = [e for e in sorted(scope.elements) if not scope.elements[e].attached_to]
        attached = [e for e in sorted(scope.elements) if scope.elements[e].attached_to]
        for e_ind in plain + attached:
            d = scope.elements[e_ind]
            steps.append({"op": "setElement", "flow": flow_ref(sid),
                          "eInd": e_ind, "preC": d.pre_c, "postC": d.post_c,
                          "typeInfo": d.type_info, "evtCode": d.evt_code.hex(),
                          "attachedTo": d.attached_to,
                          "countInst": d.count_inst})
        for e_ind in sorted(scope.children):
            d = scope.elements[e_ind]
            events = sorted(e for e, o in scope.elements.items()
                            if o.attached_to == e_ind)
            steps.append({"op": "linkSubprocess", "flow": flow_ref(sid),
                          "eInd": e_ind,
                          "childFlow": flow_ref(scope.children[e_ind]),
                          "countInst": d.count_inst,
                          "attachedEvents": events})
    for sid in order:
        steps.append({"op": "deployFactory", "ref": factory_ref(sid),
                      "flow": flow_ref(sid),
                      "blueprint": _bp_to_json(parsed.scopes[sid].blueprint())})
    steps.append({"op": "setFactory", "flow": flow_ref(parsed.root), "eInd": 0,
                  "factory": factory_ref(parsed.root)})
    for sid in order:
        scope = parsed.scopes[sid]
        for e_ind in sorted(scope.children):
            steps.append({"op": "setFactory", "flow": flow_ref(sid),
                          "eInd": e_ind,
                          "factory": factory_ref(scope.children[e_ind])})
    _role_steps(parsed, steps)
    return {"modelHash": parsed.model_hash, "root": parsed.root,
            "rootFlow": flow_ref(parsed.root), "steps": steps}


def _role_steps(parsed: ParsedModel, steps: list[dict]) -> None:
    # bindings are validated against the root flow, so it declares every role
    # used anywhere in the model
    all_roles: set[str] = set(parsed.scopes[parsed.root].declared_roles)
    for scope in parsed.scopes.values():
        all_roles.update(scope.roles.values())
    if all_roles:
        steps.append({"op": "declareRoles", "flow": flow_ref(parsed.root),
                      "roles": sorted(all_roles)})
    for sid, scope in parsed.scopes.items():
        local = set(scope.roles.values())
        if sid != parsed.root:
            local.update(scope.declared_roles)
            if local:
                steps.append({"op": "declareRoles", "flow": flow_ref(sid),
                              "roles": sorted(local)})
        for e_ind in sorted(scope.roles):
            steps.append({"op": "requireRole", "flow": flow_ref(sid),
                          "eInd": e_ind, "role": scope.roles[e_ind]})


def _bp_to_json(bp: dict) -> dict:
    out = {"vars": [list(v) for v in bp["vars"]]}
    for key in _BP_INDEXED:
        out[key] = {str(k): v for k, v in bp[key].items()}
    return out


def _bp_from_json(data: dict) -> dict:
    out = {"vars": [tuple(v) for v in data["vars"]]}
    for key in _BP_INDEXED:
        out[key] = {int(k): v for k, v in data.get(key, {}).items()}
    return out


class PlanError(RuntimeError):
    def __init__(self, step: dict, receipt: TxReceipt):
        super().__init__(f"step {step['op']} reverted: {receipt.reason}")
        self.step = step
        self.receipt = receipt


@dataclass
class PlanExecution:
    addresses: dict[str, str] = field(default_factory=dict)
    receipts: list[tuple[dict, TxReceipt]] = field(default_factory=list)
    root_ref: str = ""

    @property
    def root_flow(self) -> str:
        return self.addresses[self.root_ref]

    def costs_for(self, op: str) -> list[int]:
        return [r.cost for s, r in self.receipts if s["op"] == op]

    @property
    def total_cost(self) -> int:
        return sum(r.cost for _, r in self.receipts)


def execute_plan(ledger: Ledger, plan: dict, deployer: str, interpreter: str,
                 access_control: str,
                 reuse: dict[str, str] | None = None) -> PlanExecution:
    """Run every step as its own transaction; raises PlanError on a revert.

    `reuse` maps symbolic refs to already-deployed addresses, which makes
    re-execution idempotent: deploys are skipped for reused refs while all
    registration writes re-apply the same values.
    """
    run = PlanExecution(addresses=dict(reuse or {}),
                        root_ref=plan["rootFlow"])

    def addr(ref: str) -> str:
        if ref not in run.addresses:
            raise PlanError({"op": "resolve"},
                            TxReceipt(seq=-1, status="reverted",
                                      reason=f"unresolved ref {ref}", cost=0,
                                      value=None))
        return run.addresses[ref]

    for step in plan["steps"]:
        op = step["op"]
        if op == "deployFlow":
            if step["ref"] in run.addresses:
                continue
            receipt = ledger.deploy(deployer, "flow-node")
        elif op == "deployFactory":
            if step["ref"] in run.addresses:
                continue
            init = codec.encode([_bp_from_json(step["blueprint"]),
                                 addr(step["flow"]), interpreter,
                                 access_control])
            receipt = ledger.deploy(deployer, "factory", init)
        elif op == "setElement":
            receipt = ledger.call(deployer, addr(step["flow"]), "setElement",
                                  [step["eInd"], step["preC"], step["postC"],
                                   step["typeInfo"],
                                   bytes.fromhex(step["evtCode"]),
                                   step["attachedTo"], step["countInst"]])
        elif op == "linkSubprocess":
            receipt = ledger.call(deployer, addr(step["flow"]),
                                  "linkSubprocess",
                                  [step["eInd"], addr(step["childFlow"]),
                                   step["countInst"],
                                   list(step["attachedEvents"])])
        elif op == "setFactory":
            receipt = ledger.call(deployer, addr(step["flow"]), "setFactory",
                                  [step["eInd"], addr(step["factory"])])
        elif op == "declareRoles":
            receipt = ledger.call(deployer, access_control, "declareRoles",
                                  [addr(step["flow"]), list(step["roles"])])
        elif op == "requireRole":
            receipt = ledger.call(deployer, access_control, "requireRole",
                                  [addr(step["flow"]), step["eInd"],
                                   step["role"]])
        else:
            raise PlanError(step, TxReceipt(seq=-1, status="reverted",
                                            reason="unknown step", cost=0,
                                            value=None))
        if not receipt.ok:
            raise PlanError(step, receipt)
        if op in ("deployFlow", "deployFactory"):
            run.addresses[step["ref"]] = receipt.value
        run.receipts.append((step, receipt))
    return run
