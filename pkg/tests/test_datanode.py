import pytest

from chaincase import codec, datanode, typeinfo as ti
from chaincase.ledger import Contract, register_kind
from chaincase.scriptdsl import ScriptTypeError

ADMIN = "admin"


@register_kind
class Sink(Contract):
    """Stands in for the interpreter so check-ins have something to call."""

    KIND = "test-sink"

    def init(self, ctx, init_args):
        self.s = {"calls": []}

    def op_executeElements(self, ctx, node, e_ind):
        self.s["calls"].append([node, e_ind])
        self.env.meter_write(1)

    def op_calls(self, ctx):
        return list(self.s["calls"])


def make_blueprint():
    return datanode.blueprint(
        variables=[("bool", "flag"), ("int", "n")],
        scripts={3: "n = n + 1;"},
        gateways={
            5: {"edges": [[5, "n > 0"], [6, None]], "default": 6},
            6: {"edges": [[7, "flag"], [8, "n > 1"]], "default": None},
        },
        checkins={2: {"imports": [["bool", "v"]], "body": "flag = v;"}},
        checkouts={2: [["bool", "flag"]]},
    )


@pytest.fixture
def world(ledger):
    """flow + factory + interpreter stand-in + one fresh node."""
    interp = ledger.deploy(ADMIN, "test-sink").value
    flow = ledger.deploy(ADMIN, "flow-node").value

    def put(e_ind, pre, post, info):
        receipt = ledger.call(ADMIN, flow, "setElement",
                              [e_ind, pre, post, info, b"", 0, 1])
        assert receipt.ok

    put(1, 0, 0b10, ti.event("default", False))
    put(2, 0b10, 0b100, ti.user_task())
    put(3, 0b100, 0b1000, ti.script_task())
    put(4, 0b1000, 0, ti.event("default", True))
    put(5, 0b10000, 0b1100000, ti.gateway("exclusive", False))
    put(6, 0b1000000, 0b110000000, ti.gateway("inclusive", False))

    init = codec.encode([make_blueprint(), flow, interp, ""])
    factory = ledger.deploy(ADMIN, "factory", init).value
    node = ledger.call(interp, factory, "newInstance", []).value
    return ledger, interp, flow, factory, node


def test_new_instance_only_for_interpreter(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call("mallory", factory, "newInstance", [])
    assert not receipt.ok and receipt.reason == "REJECTED"


def test_new_instance_defaults(world):
    ledger, interp, flow, factory, node = world
    assert ledger.view(node, "getVariables", []) == {"flag": False, "n": 0}
    assert ledger.view(node, "getSubProcessState", []) == [0, 0]
    assert ledger.view(node, "getParent", []) != ""
    assert ledger.view(node, "getFlowNode", []) == flow


def test_sibling_instances_do_not_share_variables(world):
    ledger, interp, flow, factory, node = world
    other = ledger.call(interp, factory, "newInstance", []).value
    assert other != node
    ledger.call(interp, node, "checkIn", [2, {"v": True}])  # not enabled yet

    ledger.call(interp, node, "updateProcessState", [0b10, 0])
    assert ledger.call(interp, node, "checkIn", [2, {"v": True}]).ok
    assert ledger.view(node, "getVariables", [])["flag"] is True
    assert ledger.view(other, "getVariables", [])["flag"] is False


MUTATORS = [
    ("setParent", ["0xparent", 1]),
    ("addChild", [1, "0xchild"]),
    ("setInstCount", [1, 3]),
    ("decreaseInstCount", [1]),
    ("updateProcessState", [1, 0]),
    ("execScript", [3]),
]


@pytest.mark.parametrize("op,args", MUTATORS)
def test_mutators_reject_external_senders(world, op, args):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call("mallory", node, op, args)
    assert not receipt.ok and receipt.reason == "REJECTED"
    receipt = ledger.call(interp, node, op, args)
    assert receipt.ok


def test_update_process_state_bounds(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call(interp, node, "updateProcessState", [1 << 256, 0])
    assert receipt.reason == "TOO_LARGE"
    receipt = ledger.call(interp, node, "updateProcessState", [5, 2])
    assert receipt.ok
    assert ledger.view(node, "getSubProcessState", []) == [5, 2]
    assert ledger.read_log()[-1].name == "StateChanged"


def test_inst_count_floor_is_zero(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "setInstCount", [4, 1])
    ledger.call(interp, node, "decreaseInstCount", [4])
    ledger.call(interp, node, "decreaseInstCount", [4])
    assert ledger.view(node, "getCountInst", [4]) == 0


def test_children_bookkeeping(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "addChild", [7, "0xa"])
    ledger.call(interp, node, "addChild", [7, "0xb"])
    assert ledger.view(node, "getChildren", [7]) == ["0xa", "0xb"]
    assert ledger.view(node, "getAllChildren", []) == {7: ["0xa", "0xb"]}


def test_exec_script_updates_vars_and_returns_post_set(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call(interp, node, "execScript", [3])
    assert receipt.ok and receipt.value == 0b1000
    assert ledger.view(node, "getVariables", [])["n"] == 1


def test_exec_script_never_touches_control_state(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "updateProcessState", [0b100, 0])
    ledger.call(interp, node, "execScript", [3])
    assert ledger.view(node, "getSubProcessState", []) == [0b100, 0]


def test_exclusive_gateway_first_true_guard_wins(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "execScript", [3])  # n = 1
    receipt = ledger.call(interp, node, "execScript", [5])
    assert receipt.value == 1 << 5


def test_exclusive_gateway_falls_back_to_default(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call(interp, node, "execScript", [5])  # n == 0
    assert receipt.value == 1 << 6


def test_inclusive_gateway_accumulates_true_guards(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call(interp, node, "execScript", [6])
    assert not receipt.ok and receipt.reason == "NO_PATH"  # nothing true

    ledger.call(interp, node, "updateProcessState", [0, 0])
    ledger.call(interp, node, "checkIn", [2, {"v": True}])
    ledger.call(interp, node, "updateProcessState", [0b10, 0])
    assert ledger.call(interp, node, "checkIn", [2, {"v": True}]).ok
    ledger.call(interp, node, "execScript", [3])  # n = 1
    ledger.call(interp, node, "execScript", [3])  # n = 2
    receipt = ledger.call(interp, node, "execScript", [6])
    assert receipt.value == (1 << 7) | (1 << 8)


def test_exec_script_result_subset_of_post_set(world):
    """Splits can only mark edges the registry declares as outgoing."""
    ledger, interp, flow, factory, node = world
    for e_ind in (5, 6):
        post = ledger.view(flow, "getPostC", [e_ind])
        ledger.call(interp, node, "updateProcessState", [0, 0])
        ledger.call(interp, node, "execScript", [3])
        receipt = ledger.call(interp, node, "execScript", [e_ind])
        if receipt.ok:
            assert receipt.value & ~post == 0


def test_check_in_unknown_element(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call("alice", node, "checkIn", [99, {}])
    assert receipt.reason == "Not Found"


def test_check_in_requires_enabled_element(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call("alice", node, "checkIn", [2, {"v": True}])
    assert receipt.reason == "NOT_ENABLED"


def test_check_in_payload_type_error(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "updateProcessState", [0b10, 0])
    for payload in ({"v": 1}, {}, {"v": True, "x": 1}, "nope"):
        receipt = ledger.call("alice", node, "checkIn", [2, payload])
        assert receipt.reason == "TYPE_ERROR"


def test_check_in_applies_body_and_calls_interpreter(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "updateProcessState", [0b10, 0])
    receipt = ledger.call("alice", node, "checkIn", [2, {"v": True}])
    assert receipt.ok
    assert ledger.view(node, "getVariables", [])["flag"] is True
    assert ledger.view(interp, "calls", []) == [[node, 2]]


def test_check_in_then_check_out_round_trips(world):
    ledger, interp, flow, factory, node = world
    ledger.call(interp, node, "updateProcessState", [0b10, 0])
    ledger.call("alice", node, "checkIn", [2, {"v": True}])
    receipt = ledger.call("alice", node, "checkOut", [2])
    assert receipt.ok and receipt.value == {"flag": True}


def test_check_out_unknown_element(world):
    ledger, interp, flow, factory, node = world
    receipt = ledger.call("alice", node, "checkOut", [3])
    assert receipt.reason == "Not Found"


def test_import_signature(world):
    ledger, interp, flow, factory, node = world
    assert ledger.view(node, "getImportSignature", [2]) == [["bool", "v"]]
    with pytest.raises(Exception):
        ledger.view(node, "getImportSignature", [3])


def test_blueprint_validates_scripts_and_exports():
    with pytest.raises(ScriptTypeError):
        datanode.blueprint(variables=[("int", "n")], scripts={1: "m = 1;"})
    with pytest.raises(ScriptTypeError):
        datanode.blueprint(variables=[("int", "n")],
                           gateways={1: {"edges": [[1, "n"]], "default": None}})
    with pytest.raises(ScriptTypeError):
        datanode.blueprint(variables=[("int", "n")],
                           checkouts={1: [("bool", "n")]})
    with pytest.raises(ValueError):
        datanode.blueprint(variables=[("int", "n"), ("bool", "n")])
