"""Shared glue between the engine under test and the oracle simulator.

Translates ledger-side state (bitmask markings, instance addresses) into the
id-based shape the oracle emits, so the two executions can be compared as
plain data: tree states keyed by instance path, enabled-task multisets as
sorted (scopeId, elementId) lists.
"""

from __future__ import annotations

from chaincase import Ledger, typeinfo as ti
from chaincase.bpmn import parse_model
from chaincase.service import Runtime


def fresh_runtime() -> Runtime:
    return Runtime(ledger=Ledger())


def reverse_maps(parsed) -> tuple[dict, dict]:
    """Per-scope index-to-id maps for elements and edges."""
    rev_elems = {sid: {v: k for k, v in s.element_index.items()}
                 for sid, s in parsed.scopes.items()}
    rev_edges = {sid: {v: k for k, v in s.edge_index.items()}
                 for sid, s in parsed.scopes.items()}
    return rev_elems, rev_edges


def scope_of(runtime: Runtime, node: str) -> str:
    flow = runtime.ledger.view(node, "getFlowNode", [])
    return runtime.flow_scopes[flow][1]


def engine_tree_state(runtime: Runtime, parsed, case: str) -> dict:
    """Marking and running-children state for every instance in a case tree.

    Keys are instance paths built the same way the oracle builds them:
    "/" for the root, then "<subElementId>[<n>]/" per nesting level with n
    counting instances of that sub-process element in creation order.
    """
    rev_elems, rev_edges = reverse_maps(parsed)
    ledger = runtime.ledger
    out = {}

    def walk(node: str, path: str) -> None:
        sid = scope_of(runtime, node)
        tokens, running = ledger.view(node, "getSubProcessState", [])
        marks = frozenset(rev_edges[sid][b] for b in ti.mask_bits(tokens))
        running_ids = frozenset(rev_elems[sid][b]
                                for b in ti.mask_bits(running))
        out[path] = (marks, running_ids)
        children = ledger.view(node, "getAllChildren", [])
        for e_ind in sorted(children):
            elem_id = rev_elems[sid][e_ind]
            for n, child in enumerate(children[e_ind]):
                walk(child, f"{path}{elem_id}[{n}]/")

    walk(case, "/")
    return out


def engine_enabled(runtime: Runtime, parsed, case: str) -> list[tuple[str, str]]:
    """Enabled external tasks across the case tree as (scopeId, elementId)."""
    out = []
    for item in runtime.worklist(case):
        out.append((scope_of(runtime, item["node"]), item["elementId"]))
    return sorted(out)


def fire_engine_task(runtime: Runtime, case: str, scope_id: str,
                     elem_id: str, payload: dict | None = None,
                     actor: str | None = None):
    """Check in the first worklist item matching (scopeId, elementId)."""
    for item in runtime.worklist(case):
        if item["elementId"] != elem_id:
            continue
        if scope_of(runtime, item["node"]) != scope_id:
            continue
        receipt = runtime.ledger.call(actor or runtime.deployer,
                                      item["node"], "checkIn",
                                      [item["eInd"], payload or {}])
        assert receipt.ok, f"checkIn reverted: {receipt.reason}"
        return receipt
    raise AssertionError(f"no worklist item for {scope_id}/{elem_id}")


def setup_case(xml: str):
    """Register a model on a fresh ledger and start one case."""
    runtime = fresh_runtime()
    record = runtime.register_model(xml)
    receipt = runtime.create_case(record.root_flow, runtime.deployer)
    assert receipt.ok, receipt.reason
    return runtime, record, receipt.value


def state_of(runtime: Runtime, node: str) -> tuple[int, int]:
    tokens, running = runtime.ledger.view(node, "getSubProcessState", [])
    return tokens, running


def run_lockstep(xml: str, oracle_model: dict, compare_tree: bool = True,
                 max_steps: int = 64, task_rng=None) -> int:
    """Run one model to quiescence on both engine and oracle.

    After instantiation and again after every task, the enabled-task
    multisets must match; with compare_tree also the full instance-tree
    markings. Both sides fire the same task each round: the first in sorted
    order by default, or a random pick when task_rng is given. Returns the
    number of tasks fired.
    """
    from oracle_sim import OracleSim

    runtime, record, case = setup_case(xml)
    oracle = OracleSim(oracle_model)
    parsed = record.parsed
    steps = 0
    while True:
        oracle_set = oracle.enabled_tasks()
        assert engine_enabled(runtime, parsed, case) == oracle_set
        if compare_tree:
            assert engine_tree_state(runtime, parsed, case) == oracle.tree_state()
        if not oracle_set:
            break
        pick = task_rng.randrange(len(oracle_set)) if task_rng else 0
        scope_id, elem_id = oracle_set[pick]
        fire_engine_task(runtime, case, scope_id, elem_id)
        oracle.fire_task(scope_id, elem_id)
        steps += 1
        assert steps <= max_steps, "model did not quiesce"
    tokens, running = state_of(runtime, case)
    assert (tokens == 0 and running == 0) == oracle.completed
    assert oracle.completed, "generated models always drain to completion"
    return steps


__all__ = ["fresh_runtime", "reverse_maps", "scope_of", "engine_tree_state",
           "engine_enabled", "fire_engine_task", "setup_case", "state_of",
           "parse_model"]
