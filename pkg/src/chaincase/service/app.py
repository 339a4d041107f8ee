"""HTTP gateway over the ledger.

Fourteen process routes under /interpreter, /i-flow and /i-data, plus an
event monitor and role-binding endpoints. Mutations run as ledger
transactions under the caller identity from the X-Actor header (falling back
to the service deployer account); reverts map to 4xx bodies of the form
{"error": ..., "reason": <revert code>}.

Note the registration order: /i-flow/p-cases/... must precede the
/i-flow/{address} catch-all or "p-cases" would be parsed as an address.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from ..bpmn.model import ModelError
from ..ledger import Reverted, TxReceipt
from .runtime import Runtime

_STATUS = {
    "NO_INSTANCE": 404,
    "NOT_FOUND": 404,
    "Not Found": 404,
    "NOT_ENABLED": 409,
    "ROLE_TAKEN": 409,
    "UNAUTHORIZED": 403,
    "REJECTED": 403,
}
_ERROR_NAMES = {400: "bad request", 403: "forbidden", 404: "not found",
                409: "conflict"}


def _error(reason: str) -> JSONResponse:
    status = _STATUS.get(reason, 400)
    return JSONResponse(status_code=status,
                        content={"error": _ERROR_NAMES[status],
                                 "reason": reason})


def _receipt_or_error(receipt: TxReceipt, payload: dict,
                      status: int = 200) -> JSONResponse:
    if not receipt.ok:
        return _error(receipt.reason)
    payload.setdefault("cost", receipt.cost)
    payload.setdefault("txSeq", receipt.seq)
    return JSONResponse(status_code=status, content=payload)


class ModelIn(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    xml: str
    register_now: bool = Field(default=True, alias="register")
    name: str = ""


class ElementIn(BaseModel):
    eInd: int
    preC: int = 0
    postC: int = 0
    typeInfo: int = 0
    evtCode: str = ""
    attachedTo: int = 0
    countInst: int = 1


class ChildIn(BaseModel):
    eInd: int
    childFlow: str
    countInst: int = 1
    attachedEvents: list[int] = Field(default_factory=list)


class FactoryIn(BaseModel):
    eInd: int
    factory: str


class CheckIn(BaseModel):
    payload: dict = Field(default_factory=dict)


class BindIn(BaseModel):
    case: str
    role: str
    actor: str = ""


def create_app(runtime: Runtime) -> FastAPI:
    app = FastAPI(title="process gateway", version="1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.runtime = runtime
    ledger = runtime.ledger

    @app.exception_handler(RequestValidationError)
    def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "bad request",
                                     "reason": "malformed body"})

    @app.exception_handler(Reverted)
    def reverted(request: Request, exc: Reverted):
        return _error(exc.reason)

    @app.exception_handler(ModelError)
    def bad_model(request: Request, exc: ModelError):
        return JSONResponse(status_code=400,
                            content={"error": "bad request",
                                     "reason": exc.reason,
                                     "detail": exc.detail})

    def actor_of(x_actor: str | None) -> str:
        return x_actor or runtime.deployer

    # -- interpreter ---------------------------------------------------------

    @app.post("/interpreter")
    def deploy_interpreter():
        # one interpreter serves every model on this ledger
        return {"address": runtime.interpreter, "created": False}

    @app.post("/interpreter/models", status_code=201)
    def post_model(body: ModelIn, x_actor: str | None = Header(default=None)):
        record = runtime.register_model(body.xml, register=body.register_now,
                                        actor=actor_of(x_actor),
                                        name=body.name)
        out = record.meta()
        out["indexMaps"] = record.parsed.index_maps()
        return out

    @app.get("/interpreter/models")
    def list_models():
        return {"models": [r.meta() for r in runtime.models.values()]}

    @app.get("/interpreter/models/{model_hash}")
    def get_model(model_hash: str, xml: bool = False):
        record = runtime.models.get(model_hash)
        if record is None:
            return _error("NOT_FOUND")
        out = record.meta()
        out["indexMaps"] = record.parsed.index_maps()
        out["plan"] = record.plan
        if xml:
            out["xml"] = record.xml
        return out

    # -- control-flow registries ---------------------------------------------

    @app.post("/i-flow", status_code=201)
    def deploy_flow(x_actor: str | None = Header(default=None)):
        receipt = ledger.deploy(actor_of(x_actor), "flow-node")
        return _receipt_or_error(receipt, {"address": receipt.value}, 201)

    @app.patch("/i-flow/element/{cf_address}")
    def set_element(cf_address: str, body: ElementIn,
                    x_actor: str | None = Header(default=None)):
        try:
            evt_code = bytes.fromhex(body.evtCode) if body.evtCode else b""
        except ValueError:
            return _error("BAD_TYPEINFO")
        receipt = ledger.call(actor_of(x_actor), cf_address, "setElement",
                              [body.eInd, body.preC, body.postC,
                               body.typeInfo, evt_code, body.attachedTo,
                               body.countInst])
        return _receipt_or_error(receipt, {"ok": True})

    @app.patch("/i-flow/child/{cf_address}")
    def link_child(cf_address: str, body: ChildIn,
                   x_actor: str | None = Header(default=None)):
        receipt = ledger.call(actor_of(x_actor), cf_address, "linkSubprocess",
                              [body.eInd, body.childFlow, body.countInst,
                               list(body.attachedEvents)])
        return _receipt_or_error(receipt, {"ok": True})

    @app.patch("/i-flow/factory/{cf_address}")
    def set_factory(cf_address: str, body: FactoryIn,
                    x_actor: str | None = Header(default=None)):
        receipt = ledger.call(actor_of(x_actor), cf_address, "setFactory",
                              [body.eInd, body.factory])
        return _receipt_or_error(receipt, {"ok": True})

    # p-cases before the {cf_address} catch-all
    @app.post("/i-flow/p-cases/{cf_address}", status_code=201)
    def create_case(cf_address: str,
                    x_actor: str | None = Header(default=None)):
        receipt = runtime.create_case(cf_address, actor_of(x_actor))
        return _receipt_or_error(receipt, {"caseAddress": receipt.value}, 201)

    @app.get("/i-flow/p-cases/{cf_address}")
    def list_cases(cf_address: str):
        if cf_address not in ledger.instances:
            return _error("NO_INSTANCE")
        return {"cases": runtime.cases_for(cf_address)}

    @app.get("/i-flow/{cf_address}")
    def flow_contents(cf_address: str):
        contents = ledger.view(cf_address, "contents", [])
        elements = {}
        for e_ind, entry in contents["elements"].items():
            row = dict(entry)
            row["evtCode"] = entry["evtCode"].hex()
            elements[str(e_ind)] = row
        return {
            "address": cf_address,
            "admin": contents["admin"],
            "elements": elements,
            "children": {str(e): v for e, v in contents["children"].items()},
            "factories": {str(e): v for e, v in contents["factories"].items()},
            "attached": {str(e): v for e, v in contents["attached"].items()},
            "initElement": contents["initElement"],
            "eventList": contents["eventList"],
        }

    # -- case data -----------------------------------------------------------

    @app.get("/i-data/{pc_address}")
    def case_state(pc_address: str):
        state = runtime.case_state(pc_address)
        state["worklist"] = runtime.worklist(pc_address)
        return state

    @app.get("/i-data/{pc_address}/i-flow/{e_ind}")
    def check_out(pc_address: str, e_ind: int,
                  x_actor: str | None = Header(default=None)):
        receipt = ledger.call(actor_of(x_actor), pc_address, "checkOut",
                              [e_ind])
        return _receipt_or_error(receipt, {"values": receipt.value})

    @app.patch("/i-data/{pc_address}/i-flow/{e_ind}")
    def check_in(pc_address: str, e_ind: int, body: CheckIn,
                 x_actor: str | None = Header(default=None)):
        receipt = ledger.call(actor_of(x_actor), pc_address, "checkIn",
                              [e_ind, body.payload])
        return _receipt_or_error(receipt, {"ok": True})

    # -- events ----------------------------------------------------------

    @app.get("/monitor")
    def monitor(since: int = 0, wait: float = 0):
        deadline = time.monotonic() + min(max(wait, 0), 30.0)
        while True:
            events = ledger.read_log(since)
            if events or time.monotonic() >= deadline:
                break
            time.sleep(0.05)
        return {"events": [e.as_dict() for e in events],
                "next": since + len(events)}

    # -- role bindings ---------------------------------------------------

    @app.post("/access/bind")
    def bind(body: BindIn, x_actor: str | None = Header(default=None)):
        actor = actor_of(x_actor)
        receipt = ledger.call(actor, runtime.access_control, "bind",
                              [body.case, body.role, body.actor or actor])
        return _receipt_or_error(receipt, {"ok": True})

    @app.post("/access/release")
    def release(body: BindIn, x_actor: str | None = Header(default=None)):
        receipt = ledger.call(actor_of(x_actor), runtime.access_control,
                              "release", [body.case, body.role])
        return _receipt_or_error(receipt, {"ok": True})

    @app.get("/access/bindings/{case_address}")
    def bindings(case_address: str):
        return {"bindings": ledger.view(runtime.access_control, "bindings",
                                        [case_address])}

    return app
