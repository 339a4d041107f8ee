"""Control-flow registry instance: one per sub-process of a registered model.

Holds the bitmap-encoded element table (preC/postC edge sets plus the 16-bit
type word), links to child registries for sub-processes and call activities,
and the factory addresses used to mint case state nodes. Everything is
re-readable at any time, so registry edits take effect for running cases on
their next step.

Mutations are gated to the model admin account (the account that deployed
the registry). Lookups of unknown indexes return zeroed values instead of
reverting; callers treat a zero type word as "no such element".
"""

from __future__ import annotations

from . import typeinfo
from .ledger import CallContext, Contract, Reverted, register_kind

ZERO_CODE = b"\x00" * 32


def _entry_dict(pre_c: int, post_c: int, info: int, evt_code: bytes,
                attached_to: int, count_inst: int) -> dict:
    return {"preC": pre_c, "postC": post_c, "typeInfo": info,
            "evtCode": evt_code, "attachedTo": attached_to,
            "countInst": count_inst}


@register_kind
class FlowNode(Contract):
    KIND = "flow-node"

    def init(self, ctx: CallContext, init_args: bytes) -> None:
        self.s = {"admin": ctx.origin, "elements": {}, "children": {},
                  "factories": {}, "attached": {}}
        self.env.meter_write(1)

    # -- admin-gated mutations ---------------------------------------------

    def _require_admin(self, ctx: CallContext) -> None:
        if ctx.sender != self.s["admin"]:
            raise Reverted("REJECTED")

    def op_setElement(self, ctx: CallContext, e_ind: int, pre_c: int,
                      post_c: int, info: int, evt_code: bytes,
                      attached_to: int, count_inst: int):
        self._require_admin(ctx)
        if not 1 <= e_ind < typeinfo.EDGE_LIMIT:
            raise Reverted("TOO_LARGE")
        if pre_c < 0 or pre_c > typeinfo.FULL_WIDTH or post_c < 0 or post_c > typeinfo.FULL_WIDTH:
            raise Reverted("TOO_LARGE")
        try:
            typeinfo.validate(info)
        except ValueError:
            raise Reverted("BAD_TYPEINFO")
        if evt_code == b"":
            evt_code = ZERO_CODE
        if len(evt_code) != 32:
            raise Reverted("BAD_TYPEINFO")
        if attached_to:
            if attached_to == e_ind or attached_to not in self.s["elements"]:
                raise Reverted("BAD_ATTACH")
            if not (typeinfo.is_boundary(info) or typeinfo.is_esp_start(info)):
                raise Reverted("BAD_ATTACH")
        if count_inst < 1:
            count_inst = 1
        self.s["elements"][e_ind] = _entry_dict(pre_c, post_c, info, evt_code,
                                                attached_to, count_inst)
        self.env.meter_write(1)
        self.env.emit(self.address, "ElementRegistered",
                      {"node": self.address, "eInd": e_ind, "typeInfo": info})

    def op_linkSubprocess(self, ctx: CallContext, e_ind: int, child_flow: str,
                          count_inst: int, attached_events: list):
        self._require_admin(ctx)
        entry = self.s["elements"].get(e_ind)
        if entry is None or not typeinfo.spawns_child(entry["typeInfo"]):
            raise Reverted("UNKNOWN_KIND")
        target = self.env.instance(child_flow)
        if target is None or target.KIND != self.KIND:
            raise Reverted("NOT_FOUND")
        for ev in attached_events:
            ev_entry = self.s["elements"].get(ev)
            if ev_entry is None or ev_entry["attachedTo"] != e_ind:
                raise Reverted("BAD_ATTACH")
        if count_inst < 1:
            count_inst = 1
        self.s["children"][e_ind] = child_flow
        self.s["attached"][e_ind] = list(attached_events)
        entry["countInst"] = count_inst
        self.env.meter_write(1)

    def op_setFactory(self, ctx: CallContext, e_ind: int, factory: str):
        self._require_admin(ctx)
        if e_ind != 0:
            entry = self.s["elements"].get(e_ind)
            if entry is None or not typeinfo.spawns_child(entry["typeInfo"]):
                raise Reverted("UNKNOWN_KIND")
        target = self.env.instance(factory)
        if target is None or target.KIND != "factory":
            raise Reverted("NOT_FOUND")
        self.s["factories"][e_ind] = factory
        self.env.meter_write(1)

    # -- reads ---------------------------------------------------------------

    def _entry(self, e_ind: int) -> dict | None:
        self.env.meter_read(1)
        return self.s["elements"].get(e_ind)

    def op_find(self, ctx: CallContext, e_ind: int) -> list:
        entry = self._entry(e_ind)
        if entry is None:
            return [0, 0, 0]
        return [entry["preC"], entry["postC"], entry["typeInfo"]]

    def op_getPreC(self, ctx: CallContext, e_ind: int) -> int:
        entry = self._entry(e_ind)
        return entry["preC"] if entry else 0

    def op_getPostC(self, ctx: CallContext, e_ind: int) -> int:
        entry = self._entry(e_ind)
        return entry["postC"] if entry else 0

    def op_getTypeInfo(self, ctx: CallContext, e_ind: int) -> int:
        entry = self._entry(e_ind)
        return entry["typeInfo"] if entry else 0

    def op_getEvtCode(self, ctx: CallContext, e_ind: int) -> bytes:
        entry = self._entry(e_ind)
        return entry["evtCode"] if entry else ZERO_CODE

    def op_getAttachedTo(self, ctx: CallContext, e_ind: int) -> int:
        entry = self._entry(e_ind)
        return entry["attachedTo"] if entry else 0

    def op_getCountInst(self, ctx: CallContext, e_ind: int) -> int:
        entry = self._entry(e_ind)
        return entry["countInst"] if entry else 0

    def op_getInitElement(self, ctx: CallContext) -> int:
        """The start element: a catching flow event with no incoming arcs."""
        self.env.meter_read(1)
        for e_ind in sorted(self.s["elements"]):
            entry = self.s["elements"][e_ind]
            info = entry["typeInfo"]
            if (typeinfo.is_catching(info) and entry["preC"] == 0
                    and not typeinfo.is_boundary(info)
                    and not typeinfo.is_esp_start(info)):
                return e_ind
        return 0

    def op_getEventList(self, ctx: CallContext) -> list:
        self.env.meter_read(1)
        return [e for e in sorted(self.s["elements"])
                if typeinfo.is_catching(self.s["elements"][e]["typeInfo"])]

    def op_outElements(self, ctx: CallContext, e_ind: int) -> list:
        entry = self._entry(e_ind)
        if entry is None or entry["postC"] == 0:
            return []
        post = entry["postC"]
        return [e for e in sorted(self.s["elements"])
                if self.s["elements"][e]["preC"] & post]

    def op_getChildFlow(self, ctx: CallContext, e_ind: int) -> str:
        self.env.meter_read(1)
        return self.s["children"].get(e_ind, "")

    def op_getFactory(self, ctx: CallContext, e_ind: int) -> str:
        self.env.meter_read(1)
        return self.s["factories"].get(e_ind, "")

    def op_getAttachedEvents(self, ctx: CallContext, e_ind: int) -> list:
        self.env.meter_read(1)
        return list(self.s["attached"].get(e_ind, []))

    def op_contents(self, ctx: CallContext) -> dict:
        """Bulk dump used by the gateway service and the worklist walker."""
        self.env.meter_read(len(self.s["elements"]) + 1)
        return {
            "admin": self.s["admin"],
            "elements": {e: dict(v) for e, v in self.s["elements"].items()},
            "children": dict(self.s["children"]),
            "factories": dict(self.s["factories"]),
            "attached": {e: list(v) for e, v in self.s["attached"].items()},
            "initElement": self.op_getInitElement(ctx),
            "eventList": self.op_getEventList(ctx),
        }
