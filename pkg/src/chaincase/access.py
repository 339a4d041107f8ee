"""Role bindings for human task authorization.

Task-to-role requirements come from model annotations and are registered per
control-flow registry at model registration; bindings are per root case and
first-come: an unbound role can be bound by anyone, a bound role can only be
rebound or released by its current holder. canPerform is consulted by every
check-in and check-out; tasks without a role requirement are unrestricted.
"""

from __future__ import annotations

from .ledger import CallContext, Contract, Reverted, ZERO_ADDRESS, register_kind


@register_kind
class AccessControl(Contract):
    KIND = "access-control"

    def init(self, ctx: CallContext, init_args: bytes) -> None:
        self.s = {"admin": ctx.origin, "declared": {}, "requirements": {},
                  "bindings": {}}
        self.env.meter_write(1)

    def _root_of(self, ctx: CallContext, case: str) -> str:
        node = case
        for _ in range(64):
            parent = self.env.call(ctx.nest(self.address), node, "getParent", [])
            if not parent or parent == ZERO_ADDRESS:
                return node
            node = parent
        raise Reverted("REJECTED")

    def op_declareRoles(self, ctx: CallContext, flow: str, roles: list):
        if ctx.sender != self.s["admin"]:
            raise Reverted("REJECTED")
        self.s["declared"][flow] = sorted(set(roles))
        self.env.meter_write(1)

    def op_requireRole(self, ctx: CallContext, flow: str, e_ind: int, role: str):
        if ctx.sender != self.s["admin"]:
            raise Reverted("REJECTED")
        if role not in self.s["declared"].get(flow, []):
            raise Reverted("NOT_FOUND")
        self.s["requirements"].setdefault(flow, {})[e_ind] = role
        self.env.meter_write(1)

    def op_bind(self, ctx: CallContext, case: str, role: str, actor: str):
        root = self._root_of(ctx, case)
        flow = self.env.call(ctx.nest(self.address), root, "getFlowNode", [])
        if role not in self.s["declared"].get(flow, []):
            raise Reverted("NOT_FOUND")
        holder = self.s["bindings"].get(root, {}).get(role)
        if holder is not None and ctx.sender != holder:
            raise Reverted("ROLE_TAKEN")
        self.s["bindings"].setdefault(root, {})[role] = actor
        self.env.meter_write(1)
        self.env.emit(self.address, "BindingChanged",
                      {"case": root, "role": role, "actor": actor})

    def op_release(self, ctx: CallContext, case: str, role: str):
        root = self._root_of(ctx, case)
        holder = self.s["bindings"].get(root, {}).get(role)
        if holder is None:
            raise Reverted("NOT_FOUND")
        if ctx.sender != holder:
            raise Reverted("REJECTED")
        del self.s["bindings"][root][role]
        self.env.meter_write(1)
        self.env.emit(self.address, "BindingChanged",
                      {"case": root, "role": role, "actor": ""})

    def op_canPerform(self, ctx: CallContext, case: str, e_ind: int,
                      actor: str) -> bool:
        self.env.meter_read(1)
        flow = self.env.call(ctx.nest(self.address), case, "getFlowNode", [])
        role = self.s["requirements"].get(flow, {}).get(e_ind)
        if role is None:
            return True
        root = self._root_of(ctx, case)
        return self.s["bindings"].get(root, {}).get(role) == actor

    def op_bindings(self, ctx: CallContext, case: str) -> dict:
        self.env.meter_read(1)
        root = self._root_of(ctx, case)
        return dict(self.s["bindings"].get(root, {}))

    def op_roleFor(self, ctx: CallContext, flow: str, e_ind: int) -> str:
        self.env.meter_read(1)
        return self.s["requirements"].get(flow, {}).get(e_ind, "")

    def op_declaredRoles(self, ctx: CallContext, flow: str) -> list:
        self.env.meter_read(1)
        return list(self.s["declared"].get(flow, []))
