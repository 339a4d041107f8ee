"""Service-side state: one ledger, one interpreter, a model repository.

The runtime owns exactly one interpreter and one access-control instance per
ledger (reusing them across restarts and snapshot loads) plus a
content-addressed repository of parsed models keyed by document hash. When a
repository directory is given, each model persists as the original document
plus its derived index maps and registration plan, so a restarted service
can keep serving ids and worklists for cases that live on the ledger.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .. import typeinfo as ti
from ..bpmn import build_plan, execute_plan, parse_model
from ..bpmn.model import ParsedModel
from ..interpreter import is_completed, is_enabled
from ..ledger import Ledger, TxReceipt

DEFAULT_DEPLOYER = "service-admin"


@dataclass
class ModelRecord:
    model_hash: str
    xml: str
    parsed: ParsedModel
    plan: dict
    name: str = ""
    registered: bool = False
    addresses: dict[str, str] = field(default_factory=dict)
    root_flow: str = ""

    def meta(self) -> dict:
        return {"modelHash": self.model_hash, "name": self.name,
                "root": self.parsed.root, "registered": self.registered,
                "addresses": self.addresses, "rootFlow": self.root_flow}


class Runtime:
    def __init__(self, ledger: Ledger | None = None,
                 repo_dir: str | None = None,
                 deployer: str = DEFAULT_DEPLOYER):
        self.ledger = ledger if ledger is not None else Ledger()
        self.repo_dir = repo_dir
        self.deployer = deployer
        self.models: dict[str, ModelRecord] = {}
        self.flow_scopes: dict[str, tuple[str, str]] = {}
        self.interpreter = self._ensure("interpreter")
        self.access_control = self._ensure("access-control")
        if repo_dir:
            self._load_repo()

    # -- core instances ----------------------------------------------------

    def _find_kind(self, kind: str) -> str | None:
        for address, instance in self.ledger.instances.items():
            if instance.KIND == kind:
                return address
        return None

    def _ensure(self, kind: str) -> str:
        found = self._find_kind(kind)
        if found:
            return found
        receipt = self.ledger.deploy(self.deployer, kind)
        if not receipt.ok:
            raise RuntimeError(f"could not deploy {kind}: {receipt.reason}")
        return receipt.value

    # -- model repository ----------------------------------------------------

    def register_model(self, xml: str, register: bool = True,
                       actor: str | None = None,
                       name: str = "") -> ModelRecord:
        parsed = parse_model(xml)
        record = self.models.get(parsed.model_hash)
        if record is None:
            record = ModelRecord(model_hash=parsed.model_hash, xml=xml,
                                 parsed=parsed, plan=build_plan(parsed),
                                 name=name or parsed.scopes[parsed.root].name
                                 or parsed.root)
            self.models[parsed.model_hash] = record
        if register and not record.registered:
            run = execute_plan(self.ledger, record.plan,
                               actor or self.deployer, self.interpreter,
                               self.access_control)
            record.addresses = dict(run.addresses)
            record.root_flow = run.root_flow
            record.registered = True
            self._index_flows(record)
        self._persist(record)
        return record

    def _index_flows(self, record: ModelRecord) -> None:
        for sid in record.parsed.scopes:
            address = record.addresses.get(f"flow:{sid}")
            if address:
                self.flow_scopes[address] = (record.model_hash, sid)

    def _persist(self, record: ModelRecord) -> None:
        if not self.repo_dir:
            return
        entry = os.path.join(self.repo_dir, record.model_hash)
        os.makedirs(entry, exist_ok=True)
        with open(os.path.join(entry, "model.bpmn"), "w", encoding="utf-8") as fh:
            fh.write(record.xml)
        with open(os.path.join(entry, "indexmaps.json"), "w", encoding="utf-8") as fh:
            json.dump(record.parsed.index_maps(), fh, indent=2, sort_keys=True)
        with open(os.path.join(entry, "plan.json"), "w", encoding="utf-8") as fh:
            json.dump(record.plan, fh, indent=2, sort_keys=True)
        with open(os.path.join(entry, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(record.meta(), fh, indent=2, sort_keys=True)

    def _load_repo(self) -> None:
        if not os.path.isdir(self.repo_dir):
            return
        for model_hash in sorted(os.listdir(self.repo_dir)):
            entry = os.path.join(self.repo_dir, model_hash)
            model_path = os.path.join(entry, "model.bpmn")
            meta_path = os.path.join(entry, "meta.json")
            if not (os.path.isfile(model_path) and os.path.isfile(meta_path)):
                continue
            with open(model_path, encoding="utf-8") as fh:
                xml = fh.read()
            with open(meta_path, encoding="utf-8") as fh:
                meta = json.load(fh)
            parsed = parse_model(xml)
            record = ModelRecord(model_hash=parsed.model_hash, xml=xml,
                                 parsed=parsed, plan=build_plan(parsed),
                                 name=meta.get("name", ""),
                                 registered=meta.get("registered", False),
                                 addresses=meta.get("addresses", {}),
                                 root_flow=meta.get("rootFlow", ""))
            # a repository copied next to a different ledger must not serve
            # stale addresses
            if record.root_flow and record.root_flow not in self.ledger.instances:
                record.registered = False
                record.addresses = {}
                record.root_flow = ""
            self.models[record.model_hash] = record
            if record.registered:
                self._index_flows(record)

    def element_ids(self, flow_address: str) -> dict[int, str]:
        located = self.flow_scopes.get(flow_address)
        if not located:
            return {}
        record = self.models[located[0]]
        scope = record.parsed.scopes[located[1]]
        return {e_ind: d.xml_id for e_ind, d in scope.elements.items()}

    # -- cases ---------------------------------------------------------------

    def create_case(self, flow_address: str, actor: str) -> TxReceipt:
        return self.ledger.call(actor, self.interpreter, "createRootInstance",
                                [flow_address])

    def cases_for(self, flow_address: str) -> list[str]:
        cases = []
        for event in self.ledger.read_log():
            if event.name == "CaseCreated" and event.payload.get("flow") == flow_address:
                cases.append(event.payload["case"])
        return cases

    def enabled_elements(self, node: str) -> list[dict]:
        """External interaction points currently enabled on one case node."""
        flow = self.ledger.view(node, "getFlowNode", [])
        tokens, running = self.ledger.view(node, "getSubProcessState", [])
        contents = self.ledger.view(flow, "contents", [])
        ids = self.element_ids(flow)
        items = []
        for e_ind in sorted(contents["elements"]):
            entry = contents["elements"][e_ind]
            info = entry["typeInfo"]
            if not ti.is_external(info, entry["preC"]):
                continue
            if not is_enabled(entry["preC"], info, tokens, running):
                continue
            if ti.is_user_task(info):
                kind = "user"
            elif ti.is_service_task(info):
                kind = "service"
            else:
                kind = "catch"
            role = self.ledger.view(self.access_control, "roleFor",
                                    [flow, e_ind])
            items.append({
                "node": node,
                "eInd": e_ind,
                "elementId": ids.get(e_ind, ""),
                "kind": kind,
                "role": role,
                "imports": self.ledger.view(node, "getImportSignature", [e_ind]),
            })
        return items

    def case_state(self, node: str) -> dict:
        tokens, running = self.ledger.view(node, "getSubProcessState", [])
        flow = self.ledger.view(node, "getFlowNode", [])
        children = self.ledger.view(node, "getAllChildren", [])
        return {
            "address": node,
            "flow": flow,
            "tokens": ti.mask_bits(tokens),
            "runningSubProcs": ti.mask_bits(running),
            "completed": is_completed(tokens, running),
            "variables": self.ledger.view(node, "getVariables", []),
            "parent": self.ledger.view(node, "getParent", []),
            "children": {str(e): list(v) for e, v in children.items()},
            "elementIds": {str(e): v for e, v in self.element_ids(flow).items()},
            "enabled": self.enabled_elements(node),
        }

    def worklist(self, node: str) -> list[dict]:
        """Enabled external work across a whole case tree."""
        items = list(self.enabled_elements(node))
        children = self.ledger.view(node, "getAllChildren", [])
        for addresses in children.values():
            for child in addresses:
                items.extend(self.worklist(child))
        return items
