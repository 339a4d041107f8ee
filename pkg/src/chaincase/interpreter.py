"""The process interpreter: one reusable instance executes every model.

The interpreter holds no per-case data. Each operation takes the address of a
case state node, reads the control-flow registry that node points at and
advances the token game:

* executeElements runs a BFS over the registry from a given element, firing
  every enabled internal element and stopping at elements that need external
  interaction;
* createInstance mints a child case for sub-processes, call activities,
  multi-instance markers and event sub-processes;
* throwEvent and tryCatchEvent implement event propagation up the case tree
  (completion notifications, boundary catches, event sub-processes, error
  kill at the root, signal broadcast);
* killSubProcess zeroes a subtree, broadcastSignal walks the whole tree.

Only the case node itself may call executeElements and only the interpreter
may call the other operations on itself; the sole externally callable entry
point is createRootInstance. Everything else reverts with REJECTED, which
keeps the token game closed under the check-in discipline.
"""

from __future__ import annotations

from collections import deque

from . import typeinfo as ti
from .ledger import CallContext, Contract, Reverted, ZERO_ADDRESS, register_kind

ZERO_CODE = b"\x00" * 32
EXECUTE_BUDGET = 10000

# completion notification thrown on behalf of a node that became complete
# without executing an end event of its own (event sub-process drained it)
DEFAULT_END = ti.event("default", throwing=True)


def is_completed(tokens: int, running: int) -> bool:
    return tokens == 0 and running == 0


def is_enabled(pre_c: int, info: int, tokens: int, running: int,
               elements: dict | None = None, e_ind: int | None = None) -> bool:
    """Token-enablement per element kind.

    Elements without incoming arcs (start events) count as enabled, which is
    what lets a fresh case fire its init element. A parallel join needs every
    incoming edge marked; an inclusive join additionally waits while a marked
    edge or running sub-process could still reach one of its unmarked
    incoming edges (computed on the scope's own graph, passed as `elements`).
    Everything else needs at least one marked incoming edge.
    """
    if pre_c == 0:
        return True
    if ti.is_join(info) and ti.is_parallel_gateway(info):
        return pre_c & tokens == pre_c
    if pre_c & tokens == 0:
        return False
    if ti.is_join(info) and ti.is_inclusive_gateway(info):
        if elements is None or e_ind is None:
            return True
        return not _inclusive_blocked(elements, e_ind, pre_c, tokens, running)
    return True


def _inclusive_blocked(elements: dict, join_ind: int, pre_c: int,
                       tokens: int, running: int) -> bool:
    unmarked = pre_c & ~tokens
    if unmarked == 0:
        return False
    by_edge: dict[int, list[int]] = {}
    for e_ind, entry in elements.items():
        for edge in ti.mask_bits(entry["preC"]):
            by_edge.setdefault(edge, []).append(e_ind)
    reached_edges = 0
    elem_queue = deque(e for e in ti.mask_bits(running) if e in elements)
    # boundary exception flow can also still deliver tokens downstream
    for e_ind, entry in elements.items():
        if ti.is_boundary(entry["typeInfo"]) and (running >> entry["attachedTo"]) & 1:
            elem_queue.append(e_ind)
    edge_queue = deque(ti.mask_bits(tokens))
    seen_elems = set()
    while elem_queue or edge_queue:
        while elem_queue:
            e_ind = elem_queue.popleft()
            if e_ind in seen_elems or e_ind == join_ind:
                continue
            seen_elems.add(e_ind)
            for edge in ti.mask_bits(elements[e_ind]["postC"]):
                if not (reached_edges >> edge) & 1:
                    reached_edges |= 1 << edge
                    edge_queue.append(edge)
        while edge_queue:
            edge = edge_queue.popleft()
            for target in by_edge.get(edge, []):
                if target not in seen_elems and target != join_ind:
                    elem_queue.append(target)
            if elem_queue:
                break
    return bool(reached_edges & unmarked)


def remove_tokens(tokens: int, pre_c: int, info: int) -> int:
    """Consume the enabling tokens of a firing element.

    Parallel joins clear their whole preC, inclusive joins every marked preC
    edge, and everything else (exclusive joins included) exactly the lowest
    marked incoming edge.
    """
    if ti.is_join(info) and ti.is_parallel_gateway(info):
        return tokens & ~pre_c
    enabling = pre_c & tokens
    if ti.is_join(info) and ti.is_inclusive_gateway(info):
        return tokens & ~enabling
    return tokens & ~ti.lowest_bit(enabling)


@register_kind
class Interpreter(Contract):
    KIND = "interpreter"

    def init(self, ctx: CallContext, init_args: bytes) -> None:
        self.s = {}

    # -- plumbing ----------------------------------------------------------

    def _call(self, ctx: CallContext, to: str, op: str, args: list):
        return self.env.call(ctx.nest(self.address), to, op, args)

    def _self_call(self, ctx: CallContext, op: str, args: list):
        return self.env.call(ctx.nest(self.address), self.address, op, args)

    def _state(self, ctx: CallContext, node: str) -> tuple[int, int]:
        tokens, running = self._call(ctx, node, "getSubProcessState", [])
        return tokens, running

    def _persist(self, ctx: CallContext, node: str, tokens: int, running: int):
        self._call(ctx, node, "updateProcessState", [tokens, running])

    def _internal_successors(self, ctx: CallContext, node: str, flow: str,
                             e_ind: int) -> list[int]:
        out = []
        for nxt in self._call(ctx, flow, "outElements", [e_ind]):
            pre_c, _, info = self._call(ctx, flow, "find", [nxt])
            if not ti.is_external(info, pre_c):
                out.append(nxt)
        return out

    # -- root instantiation (the only externally callable operation) --------

    def op_createRootInstance(self, ctx: CallContext, flow: str) -> str:
        factory = self._call(ctx, flow, "getFactory", [0])
        if not factory:
            raise Reverted("REJECTED")
        case = self._call(ctx.nest(self.address), factory, "newInstance", [])
        self.env.emit(self.address, "CaseCreated",
                      {"case": case, "flow": flow})
        init = self._call(ctx, flow, "getInitElement", [])
        self._self_call(ctx, "executeElements", [case, init])
        return case

    # -- token game ----------------------------------------------------------

    def op_executeElements(self, ctx: CallContext, node: str, e_ind: int):
        if ctx.sender not in (node, self.address):
            raise Reverted("REJECTED")
        flow = self._call(ctx, node, "getFlowNode", [])
        tokens, running = self._state(ctx, node)
        queue = deque([e_ind])
        budget = EXECUTE_BUDGET
        while queue:
            budget -= 1
            if budget < 0:
                raise Reverted("BUDGET")
            e_ind = queue.popleft()
            pre_c, post_c, info = self._call(ctx, flow, "find", [e_ind])
            if info == 0:
                continue
            # boundary and event-sub-process starts fire through catches only
            if ti.is_boundary(info) or ti.is_esp_start(info):
                continue
            if not self._enabled(ctx, flow, e_ind, pre_c, info, tokens, running):
                continue
            tokens = remove_tokens(tokens, pre_c, info)

            if ti.spawns_child(info):
                count = self._call(ctx, flow, "getCountInst", [e_ind])
                running |= 1 << e_ind
                self._call(ctx, node, "setInstCount", [e_ind, count])
                self._persist(ctx, node, tokens, running)
                spawn = count if (ti.is_multi_instance(info)
                                  and not ti.is_sequential_mi(info)) else 1
                for _ in range(spawn):
                    self._self_call(ctx, "createInstance", [node, e_ind])
                tokens, running = self._state(ctx, node)
            elif ti.is_script_task(info) or (ti.is_split(info)
                                             and not ti.is_parallel_gateway(info)):
                produced = self._call(ctx, node, "execScript", [e_ind])
                tokens |= produced
            elif ti.is_throwing(info):
                # pre-place the continuation token so the propagation path
                # sees an intermediate throw as still running, not completed
                tokens |= post_c
                self._persist(ctx, node, tokens, running)
                evt_code = self._call(ctx, flow, "getEvtCode", [e_ind])
                self._self_call(ctx, "throwEvent", [node, evt_code, info])
                tokens, running = self._state(ctx, node)
                if is_completed(tokens, running):
                    return
            else:
                # remaining tasks, gateways and catching flow events
                tokens |= post_c

            for nxt in self._call(ctx, flow, "outElements", [e_ind]):
                nxt_pre, _, nxt_info = self._call(ctx, flow, "find", [nxt])
                if not ti.is_external(nxt_info, nxt_pre):
                    queue.append(nxt)
        self._persist(ctx, node, tokens, running)

    def _enabled(self, ctx: CallContext, flow: str, e_ind: int, pre_c: int,
                 info: int, tokens: int, running: int) -> bool:
        if ti.is_join(info) and ti.is_inclusive_gateway(info):
            elements = self._call(ctx, flow, "contents", [])["elements"]
            return is_enabled(pre_c, info, tokens, running, elements, e_ind)
        return is_enabled(pre_c, info, tokens, running)

    # -- instantiation ---------------------------------------------------

    def op_createInstance(self, ctx: CallContext, node: str, e_ind: int) -> str:
        if ctx.sender != self.address:
            raise Reverted("REJECTED")
        flow = self._call(ctx, node, "getFlowNode", [])
        child_flow = self._call(ctx, flow, "getChildFlow", [e_ind])
        if not child_flow:
            raise Reverted("NO_INSTANCE")
        factory = self._call(ctx, flow, "getFactory", [e_ind])
        if not factory:
            raise Reverted("REJECTED")
        child = self._call(ctx.nest(self.address), factory, "newInstance", [])
        self._call(ctx, child, "setParent", [node, e_ind])
        self._call(ctx, node, "addChild", [e_ind, child])
        init = self._call(ctx, child_flow, "getInitElement", [])
        self._self_call(ctx, "executeElements", [child, init])
        return child

    # -- event propagation -----------------------------------------------

    def op_throwEvent(self, ctx: CallContext, node: str, evt_code: bytes,
                      info: int):
        if ctx.sender != self.address:
            raise Reverted("REJECTED")
        tokens, running = self._state(ctx, node)
        if ti.is_message(info):
            self.env.emit(self.address, "MessageSent",
                          {"node": node, "evtCode": evt_code.hex()})
        if ti.is_message(info) or ti.is_default_event(info):
            if is_completed(tokens, running):
                self._self_call(ctx, "tryCatchEvent", [node, evt_code, info])
            return
        if ti.is_terminate(info):
            self._self_call(ctx, "killSubProcess", [node])
        self._self_call(ctx, "tryCatchEvent", [node, evt_code, info])

    def op_tryCatchEvent(self, ctx: CallContext, node: str, evt_code: bytes,
                         info: int):
        if ctx.sender != self.address:
            raise Reverted("REJECTED")
        parent = self._call(ctx, node, "getParent", [])
        if not parent or parent == ZERO_ADDRESS:
            if ti.is_error(info):
                self._self_call(ctx, "killSubProcess", [node])
            return
        parent_flow = self._call(ctx, parent, "getFlowNode", [])
        sub_p_ind = self._call(ctx, node, "getIndexInParent", [])
        sub_p_info = self._call(ctx, parent_flow, "getTypeInfo", [sub_p_ind])
        tokens, running = self._state(ctx, node)

        # completion notification half: never for errors, which always divert
        if is_completed(tokens, running) and not ti.is_error(info):
            self._call(ctx, parent, "decreaseInstCount", [sub_p_ind])
            remaining = self._call(ctx, parent, "getCountInst", [sub_p_ind])
            if remaining == 0:
                p_tokens, p_running = self._state(ctx, parent)
                p_running &= ~(1 << sub_p_ind)
                p_tokens |= self._call(ctx, parent_flow, "getPostC", [sub_p_ind])
                self._persist(ctx, parent, p_tokens, p_running)
                for nxt in self._internal_successors(ctx, parent, parent_flow,
                                                     sub_p_ind):
                    self._self_call(ctx, "executeElements", [parent, nxt])
                p_tokens, p_running = self._state(ctx, parent)
                grand = self._call(ctx, parent, "getParent", [])
                if is_completed(p_tokens, p_running) and grand and grand != ZERO_ADDRESS:
                    self._self_call(ctx, "tryCatchEvent",
                                    [parent, ZERO_CODE, DEFAULT_END])
            elif ti.is_sequential_mi(sub_p_info):
                self._self_call(ctx, "createInstance", [parent, sub_p_ind])

        if ti.is_message(info) or ti.is_default_event(info) or ti.is_terminate(info):
            return

        if ti.is_signal(info):
            root = parent
            while True:
                up = self._call(ctx, root, "getParent", [])
                if not up or up == ZERO_ADDRESS:
                    break
                root = up
            self._self_call(ctx, "broadcastSignal", [root])
            return

        # error / escalation: scan the parent's catching events
        for ev in self._call(ctx, parent_flow, "getEventList", []):
            ev_info = self._call(ctx, parent_flow, "getTypeInfo", [ev])
            if self._call(ctx, parent_flow, "getEvtCode", [ev]) != evt_code:
                continue
            if ti.is_error(info) != ti.is_error(ev_info) \
                    or ti.is_escalation(info) != ti.is_escalation(ev_info):
                continue
            attached = self._call(ctx, parent_flow, "getAttachedTo", [ev])
            if ti.is_esp_start(ev_info):
                self._fire_event_sub_process(ctx, parent, ev_info, attached)
                return
            if ti.is_boundary(ev_info) and attached == sub_p_ind:
                self._fire_boundary(ctx, parent, parent_flow, ev, ev_info,
                                    node, sub_p_ind)
                return
        # no catcher here: re-throw on behalf of the parent
        self._self_call(ctx, "throwEvent", [parent, evt_code, info])

    def _fire_event_sub_process(self, ctx: CallContext, parent: str,
                                ev_info: int, esp_ind: int):
        if ti.is_interrupting(ev_info):
            self._self_call(ctx, "killSubProcess", [parent])
        self._call(ctx, parent, "setInstCount", [esp_ind, 1])
        p_tokens, p_running = self._state(ctx, parent)
        self._persist(ctx, parent, p_tokens, p_running | (1 << esp_ind))
        self._self_call(ctx, "createInstance", [parent, esp_ind])

    def _fire_boundary(self, ctx: CallContext, parent: str, parent_flow: str,
                       ev: int, ev_info: int, child: str, sub_p_ind: int):
        p_tokens, p_running = self._state(ctx, parent)
        if ti.is_interrupting(ev_info):
            # interrupting catch cancels every sibling instance too
            for sibling in self._call(ctx, parent, "getChildren", [sub_p_ind]):
                self._self_call(ctx, "killSubProcess", [sibling])
            p_running &= ~(1 << sub_p_ind)
        p_tokens |= self._call(ctx, parent_flow, "getPostC", [ev])
        self._persist(ctx, parent, p_tokens, p_running)
        for nxt in self._internal_successors(ctx, parent, parent_flow, ev):
            self._self_call(ctx, "executeElements", [parent, nxt])

    # -- subtree control ---------------------------------------------------

    def op_killSubProcess(self, ctx: CallContext, node: str):
        if ctx.sender != self.address:
            raise Reverted("REJECTED")
        children = self._call(ctx, node, "getAllChildren", [])
        for addrs in children.values():
            for child in addrs:
                self._self_call(ctx, "killSubProcess", [child])
        self._persist(ctx, node, 0, 0)

    def op_broadcastSignal(self, ctx: CallContext, node: str):
        if ctx.sender != self.address:
            raise Reverted("REJECTED")
        children_before = self._call(ctx, node, "getAllChildren", [])
        tokens, running = self._state(ctx, node)
        if tokens or running:
            flow = self._call(ctx, node, "getFlowNode", [])
            for ev in self._call(ctx, flow, "getEventList", []):
                ev_info = self._call(ctx, flow, "getTypeInfo", [ev])
                if not (ti.is_signal(ev_info) and ti.is_catching(ev_info)):
                    continue
                tokens, running = self._state(ctx, node)
                attached = self._call(ctx, flow, "getAttachedTo", [ev])
                if ti.is_esp_start(ev_info):
                    self._fire_event_sub_process(ctx, node, ev_info, attached)
                elif ti.is_boundary(ev_info):
                    if not (running >> attached) & 1:
                        continue
                    if ti.is_interrupting(ev_info):
                        for child in self._call(ctx, node, "getChildren", [attached]):
                            self._self_call(ctx, "killSubProcess", [child])
                        running &= ~(1 << attached)
                    out_mask = self._call(ctx, flow, "getPostC", [ev])
                    self._persist(ctx, node, tokens | out_mask, running)
                    for nxt in self._internal_successors(ctx, node, flow, ev):
                        self._self_call(ctx, "executeElements", [node, nxt])
                else:
                    pre_c = self._call(ctx, flow, "getPreC", [ev])
                    if pre_c and pre_c & tokens:
                        self._self_call(ctx, "executeElements", [node, ev])
        for addrs in children_before.values():
            for child in addrs:
                self._self_call(ctx, "broadcastSignal", [child])
