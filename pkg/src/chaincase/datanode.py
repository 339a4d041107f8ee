"""Per-case state instances and the factories that mint them.

A factory is deployed per sub-process scope with a blueprint describing the
scope's variables, script bodies, gateway guard tables and check-in/out
signatures; newInstance deploys a fresh DataNode carrying that blueprint, so
instantiation cost scales with the blueprint payload the way deployment cost
scales with compiled contract size.

DataNodes hold the token/running-sub-process bitsets, the typed variables,
the parent/child links of the case tree and the remaining-instance counters.
State mutators accept only the interpreter as sender; check-in/check-out are
the external interaction points and enforce access control themselves.
"""

from __future__ import annotations

from . import codec, scriptdsl, typeinfo
from .ledger import CallContext, Contract, Reverted, ZERO_ADDRESS, register_kind

DEFAULTS = {"bool": False, "int": 0, "text": ""}


def blueprint(variables=None, scripts=None, gateways=None, checkins=None,
              checkouts=None, roles=None) -> dict:
    """Assemble a scope blueprint; validates scripts against the declarations."""
    bp = {
        "vars": [list(v) for v in (variables or [])],
        "scripts": dict(scripts or {}),
        "gateways": dict(gateways or {}),
        "checkins": dict(checkins or {}),
        "checkouts": dict(checkouts or {}),
        "roles": dict(roles or {}),
    }
    types = {name: t for t, name in bp["vars"]}
    if len(types) != len(bp["vars"]):
        raise ValueError("duplicate variable declaration")
    for src in bp["scripts"].values():
        scriptdsl.check_program(scriptdsl.parse_program(src), types)
    for table in bp["gateways"].values():
        for _, guard in table["edges"]:
            if guard is not None:
                expr = scriptdsl.parse_expression(guard)
                if scriptdsl.check_expression(expr, types) != "bool":
                    raise scriptdsl.ScriptTypeError("guard must be bool")
    for entry in bp["checkins"].values():
        params = {name: t for t, name in entry["imports"]}
        scriptdsl.check_program(scriptdsl.parse_program(entry["body"]),
                                types, params)
    for exports in bp["checkouts"].values():
        for t, name in exports:
            if types.get(name) != t:
                raise scriptdsl.ScriptTypeError(
                    f"export {name!r} does not match a declared {t} variable")
    return bp


@register_kind
class Factory(Contract):
    KIND = "factory"

    def init(self, ctx: CallContext, init_args: bytes) -> None:
        bp, flow, interp, ac = codec.decode(init_args)
        self.s = {"blueprint": bp, "flow": flow, "interp": interp, "ac": ac}
        self.env.meter_write(1)

    def op_newInstance(self, ctx: CallContext) -> str:
        if ctx.sender != self.s["interp"]:
            raise Reverted("REJECTED")
        init_args = codec.encode([self.s["blueprint"], self.s["flow"],
                                  self.s["interp"], self.s["ac"]])
        return self.env.deploy(ctx, self.address, "data-node", init_args)

    def op_getFlowNode(self, ctx: CallContext) -> str:
        self.env.meter_read(1)
        return self.s["flow"]


@register_kind
class DataNode(Contract):
    KIND = "data-node"

    def init(self, ctx: CallContext, init_args: bytes) -> None:
        bp, flow, interp, ac = codec.decode(init_args)
        self.s = {
            "blueprint": bp,
            "flow": flow,
            "interp": interp,
            "ac": ac,
            "parent": ZERO_ADDRESS,
            "indexInParent": 0,
            "tokens": 0,
            "running": 0,
            "vars": {name: DEFAULTS[t] for t, name in bp["vars"]},
            "instCount": {},
            "children": {},
        }
        self.env.meter_write(1)
        self._programs: dict[str, list] = {}

    # lazy program cache; state keeps sources only
    def _program(self, src: str) -> list:
        cache = getattr(self, "_programs", None)
        if cache is None:
            cache = self._programs = {}
        if src not in cache:
            cache[src] = scriptdsl.parse_program(src)
        return cache[src]

    def _require_interp(self, ctx: CallContext) -> None:
        if ctx.sender != self.s["interp"]:
            raise Reverted("REJECTED")

    # -- interpreter-only mutators -------------------------------------------

    def op_setParent(self, ctx: CallContext, parent: str, index_in_parent: int):
        self._require_interp(ctx)
        self.s["parent"] = parent
        self.s["indexInParent"] = index_in_parent
        self.env.meter_write(1)

    def op_addChild(self, ctx: CallContext, e_ind: int, child: str):
        self._require_interp(ctx)
        self.s["children"].setdefault(e_ind, []).append(child)
        self.env.meter_write(1)

    def op_setInstCount(self, ctx: CallContext, e_ind: int, count: int):
        self._require_interp(ctx)
        self.s["instCount"][e_ind] = count
        self.env.meter_write(1)

    def op_decreaseInstCount(self, ctx: CallContext, e_ind: int):
        self._require_interp(ctx)
        current = self.s["instCount"].get(e_ind, 0)
        self.s["instCount"][e_ind] = max(0, current - 1)
        self.env.meter_write(1)

    def op_updateProcessState(self, ctx: CallContext, tokens: int, running: int):
        self._require_interp(ctx)
        if not 0 <= tokens <= typeinfo.FULL_WIDTH or not 0 <= running <= typeinfo.FULL_WIDTH:
            raise Reverted("TOO_LARGE")
        self.s["tokens"] = tokens
        self.s["running"] = running
        self.env.meter_write(2)
        self.env.emit(self.address, "StateChanged",
                      {"node": self.address, "tokens": tokens, "running": running})

    def op_execScript(self, ctx: CallContext, e_ind: int) -> int:
        """Run the script or guard table for e_ind; returns the produced edge set."""
        self._require_interp(ctx)
        bp = self.s["blueprint"]
        src = bp["scripts"].get(e_ind)
        if src is not None:
            try:
                updates = scriptdsl.eval_program(self._program(src), self.s["vars"])
            except scriptdsl.ScriptError:
                raise Reverted("SCRIPT_ERROR")
            self._apply(updates)
            return self.env.call(ctx.nest(self.address), self.s["flow"],
                                 "getPostC", [e_ind])
        table = bp["gateways"].get(e_ind)
        if table is None:
            return 0
        info = self.env.call(ctx.nest(self.address), self.s["flow"],
                             "getTypeInfo", [e_ind])
        self.env.meter_read(1)
        taken = 0
        for edge, guard in sorted(table["edges"]):
            if guard is None:
                continue
            try:
                value = scriptdsl.eval_expression(
                    scriptdsl.parse_expression(guard), self.s["vars"])
            except scriptdsl.ScriptError:
                raise Reverted("SCRIPT_ERROR")
            if value:
                if typeinfo.is_inclusive_gateway(info):
                    taken |= 1 << edge
                else:
                    return 1 << edge
        if taken:
            return taken
        if table.get("default") is not None:
            return 1 << table["default"]
        raise Reverted("NO_PATH")

    # -- external interaction --------------------------------------------

    def op_checkIn(self, ctx: CallContext, e_ind: int, payload: dict):
        entry = self.s["blueprint"]["checkins"].get(e_ind)
        if entry is None:
            raise Reverted("Not Found")
        self._authorize(ctx, e_ind)
        pre_c, _, info = self.env.call(ctx.nest(self.address), self.s["flow"],
                                       "find", [e_ind])
        from .interpreter import is_enabled  # avoid a module cycle
        if info == 0 or not is_enabled(pre_c, info, self.s["tokens"],
                                       self.s["running"]):
            raise Reverted("NOT_ENABLED")
        try:
            params = scriptdsl.coerce_payload(entry["imports"], payload)
        except scriptdsl.ScriptError:
            raise Reverted("TYPE_ERROR")
        try:
            updates = scriptdsl.eval_program(self._program(entry["body"]),
                                             self.s["vars"], params)
        except scriptdsl.ScriptError:
            raise Reverted("SCRIPT_ERROR")
        self._apply(updates)
        self.env.call(ctx.nest(self.address), self.s["interp"],
                      "executeElements", [self.address, e_ind])
        return True

    def op_checkOut(self, ctx: CallContext, e_ind: int) -> dict:
        exports = self.s["blueprint"]["checkouts"].get(e_ind)
        if exports is None:
            raise Reverted("Not Found")
        self._authorize(ctx, e_ind)
        self.env.meter_read(len(exports))
        return {name: self.s["vars"][name] for _, name in exports}

    def _authorize(self, ctx: CallContext, e_ind: int) -> None:
        ac = self.s["ac"]
        if not ac or ac == ZERO_ADDRESS:
            return
        allowed = self.env.call(ctx.nest(self.address), ac, "canPerform",
                                [self.address, e_ind, ctx.origin])
        if not allowed:
            raise Reverted("UNAUTHORIZED")

    def _apply(self, updates: dict) -> None:
        for name, value in updates.items():
            self.s["vars"][name] = value
            self.env.meter_write(1)

    # -- reads ---------------------------------------------------------------

    def op_getSubProcessState(self, ctx: CallContext) -> list:
        self.env.meter_read(2)
        return [self.s["tokens"], self.s["running"]]

    def op_getParent(self, ctx: CallContext) -> str:
        self.env.meter_read(1)
        return self.s["parent"]

    def op_getIndexInParent(self, ctx: CallContext) -> int:
        self.env.meter_read(1)
        return self.s["indexInParent"]

    def op_getFlowNode(self, ctx: CallContext) -> str:
        self.env.meter_read(1)
        return self.s["flow"]

    def op_getCountInst(self, ctx: CallContext, e_ind: int) -> int:
        self.env.meter_read(1)
        return self.s["instCount"].get(e_ind, 0)

    def op_getChildren(self, ctx: CallContext, e_ind: int) -> list:
        self.env.meter_read(1)
        return list(self.s["children"].get(e_ind, []))

    def op_getAllChildren(self, ctx: CallContext) -> dict:
        self.env.meter_read(1)
        return {e: list(v) for e, v in self.s["children"].items()}

    def op_getVariables(self, ctx: CallContext) -> dict:
        self.env.meter_read(len(self.s["vars"]))
        return dict(self.s["vars"])

    def op_getImportSignature(self, ctx: CallContext, e_ind: int) -> list:
        self.env.meter_read(1)
        entry = self.s["blueprint"]["checkins"].get(e_ind)
        if entry is None:
            raise Reverted("Not Found")
        return [list(p) for p in entry["imports"]]
