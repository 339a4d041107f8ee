"""16-bit element type encoding and 256-bit edge sets.

The registry stores one 16-bit word per element. Three mutually exclusive
category bits select how the remaining bits are read:

    bit 0   activity          bit 1   gateway           bit 2   event
    bit 3   task kind (activity) / join flag (gateway) / throwing (event)
    bit 4   multi-instance (activity) / interrupting (event)
    bit 5   sequential multi-instance
    bit 6   sub-process       bit 7   call-activity
    bit 8   event-sub-process start
    bit 9   boundary
    bit 10  default (none) subtype
    bit 11  user task / terminate
    bit 12  script task / error
    bit 13  service task / message
    bit 14  exclusive gateway / escalation
    bit 15  parallel gateway / signal

An inclusive gateway sets bits 14 and 15 together; for events those two bits
are distinct kinds. Checking a user task therefore needs bits 0 and 11, and
a terminate event bits 2 and 11, since bit 11 alone is ambiguous.

Edge sets are plain ints used as 256-wide bitsets (bit i = sequence flow with
index i), and the same representation holds the running sub-process set
(bit i = element index i).
"""

from __future__ import annotations

ACTIVITY = 1 << 0
GATEWAY = 1 << 1
EVENT = 1 << 2
FLAG_A = 1 << 3          # task kind / join / throwing
FLAG_B = 1 << 4          # multi-instance / interrupting
SEQUENTIAL_MI = 1 << 5
SUB_PROCESS = 1 << 6
CALL_ACTIVITY = 1 << 7
ESP_START = 1 << 8
BOUNDARY = 1 << 9
KIND_DEFAULT = 1 << 10
KIND_USER_TERMINATE = 1 << 11
KIND_SCRIPT_ERROR = 1 << 12
KIND_SERVICE_MESSAGE = 1 << 13
KIND_EXCLUSIVE_ESCALATION = 1 << 14
KIND_PARALLEL_SIGNAL = 1 << 15

EDGE_LIMIT = 256
FULL_WIDTH = (1 << EDGE_LIMIT) - 1

EVENT_KIND_BITS = (KIND_DEFAULT | KIND_USER_TERMINATE | KIND_SCRIPT_ERROR
                   | KIND_SERVICE_MESSAGE | KIND_EXCLUSIVE_ESCALATION
                   | KIND_PARALLEL_SIGNAL)


# -- constructors ------------------------------------------------------------

def user_task() -> int:
    return ACTIVITY | FLAG_A | KIND_USER_TERMINATE


def script_task() -> int:
    return ACTIVITY | FLAG_A | KIND_SCRIPT_ERROR


def service_task() -> int:
    return ACTIVITY | FLAG_A | KIND_SERVICE_MESSAGE


def sub_process(multi: str | None = None) -> int:
    return ACTIVITY | SUB_PROCESS | _mi_bits(multi)


def call_activity(multi: str | None = None) -> int:
    return ACTIVITY | CALL_ACTIVITY | _mi_bits(multi)


def _mi_bits(multi: str | None) -> int:
    if multi is None:
        return 0
    if multi == "parallel":
        return FLAG_B
    if multi == "sequential":
        return FLAG_B | SEQUENTIAL_MI
    raise ValueError(f"bad multi-instance marker: {multi!r}")


GATEWAY_KIND_BITS = {
    "exclusive": KIND_EXCLUSIVE_ESCALATION,
    "parallel": KIND_PARALLEL_SIGNAL,
    "inclusive": KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL,
}


def gateway(kind: str, join: bool) -> int:
    return GATEWAY | GATEWAY_KIND_BITS[kind] | (FLAG_A if join else 0)


EVENT_KIND_BIT = {
    "default": KIND_DEFAULT,
    "terminate": KIND_USER_TERMINATE,
    "error": KIND_SCRIPT_ERROR,
    "message": KIND_SERVICE_MESSAGE,
    "escalation": KIND_EXCLUSIVE_ESCALATION,
    "signal": KIND_PARALLEL_SIGNAL,
}


def event(kind: str, throwing: bool, interrupting: bool = False,
          boundary: bool = False, esp_start: bool = False) -> int:
    info = EVENT | EVENT_KIND_BIT[kind]
    if throwing:
        info |= FLAG_A
    if interrupting:
        info |= FLAG_B
    if boundary:
        info |= BOUNDARY
    if esp_start:
        info |= ESP_START
    return info


# -- predicates --------------------------------------------------------------

def is_activity(info: int) -> bool:
    return bool(info & ACTIVITY)


def is_gateway(info: int) -> bool:
    return bool(info & GATEWAY)


def is_event(info: int) -> bool:
    return bool(info & EVENT)


def is_task(info: int) -> bool:
    return bool(info & ACTIVITY) and bool(info & FLAG_A)


def is_user_task(info: int) -> bool:
    # bits 0 and 11 together; bit 11 alone could mean terminate
    return bool(info & ACTIVITY) and bool(info & KIND_USER_TERMINATE)


def is_script_task(info: int) -> bool:
    return bool(info & ACTIVITY) and bool(info & KIND_SCRIPT_ERROR)


def is_service_task(info: int) -> bool:
    return bool(info & ACTIVITY) and bool(info & KIND_SERVICE_MESSAGE)


def is_sub_process(info: int) -> bool:
    return bool(info & ACTIVITY) and bool(info & SUB_PROCESS)


def is_call_activity(info: int) -> bool:
    return bool(info & ACTIVITY) and bool(info & CALL_ACTIVITY)


def spawns_child(info: int) -> bool:
    return is_sub_process(info) or is_call_activity(info)


def is_multi_instance(info: int) -> bool:
    return bool(info & ACTIVITY) and bool(info & FLAG_B)


def is_sequential_mi(info: int) -> bool:
    return is_multi_instance(info) and bool(info & SEQUENTIAL_MI)


def is_join(info: int) -> bool:
    return bool(info & GATEWAY) and bool(info & FLAG_A)


def is_split(info: int) -> bool:
    return bool(info & GATEWAY) and not (info & FLAG_A)


def is_exclusive_gateway(info: int) -> bool:
    return bool(info & GATEWAY) and (info & (KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL)) == KIND_EXCLUSIVE_ESCALATION


def is_parallel_gateway(info: int) -> bool:
    return bool(info & GATEWAY) and (info & (KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL)) == KIND_PARALLEL_SIGNAL


def is_inclusive_gateway(info: int) -> bool:
    both = KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL
    return bool(info & GATEWAY) and (info & both) == both


def is_throwing(info: int) -> bool:
    return bool(info & EVENT) and bool(info & FLAG_A)


def is_catching(info: int) -> bool:
    return bool(info & EVENT) and not (info & FLAG_A)


def is_interrupting(info: int) -> bool:
    return bool(info & EVENT) and bool(info & FLAG_B)


def is_boundary(info: int) -> bool:
    return bool(info & EVENT) and bool(info & BOUNDARY)


def is_esp_start(info: int) -> bool:
    return bool(info & EVENT) and bool(info & ESP_START)


def is_terminate(info: int) -> bool:
    # bits 2 and 11 together; bit 11 alone could mean user task
    return bool(info & EVENT) and bool(info & KIND_USER_TERMINATE)


def is_error(info: int) -> bool:
    return bool(info & EVENT) and bool(info & KIND_SCRIPT_ERROR)


def is_message(info: int) -> bool:
    return bool(info & EVENT) and bool(info & KIND_SERVICE_MESSAGE)


def is_escalation(info: int) -> bool:
    return bool(info & EVENT) and (info & EVENT_KIND_BITS) == KIND_EXCLUSIVE_ESCALATION


def is_signal(info: int) -> bool:
    return bool(info & EVENT) and (info & EVENT_KIND_BITS) == KIND_PARALLEL_SIGNAL


def is_default_event(info: int) -> bool:
    return bool(info & EVENT) and bool(info & KIND_DEFAULT)


def event_kind(info: int) -> str:
    for name, bit in EVENT_KIND_BIT.items():
        if (info & EVENT_KIND_BITS) == bit:
            return name
    raise ValueError(f"no single event kind in 0x{info:04x}")


def is_external(info: int, pre_c: int) -> bool:
    """Elements fired from outside rather than by queue traversal.

    User and service tasks wait for a check-in; so does a catching event
    sitting in the flow (non-empty preC rules out start events, and boundary
    or event-sub-process starts are driven by event propagation instead).
    """
    if is_user_task(info) or is_service_task(info):
        return True
    if is_catching(info) and not is_boundary(info) and not is_esp_start(info):
        return pre_c != 0
    return False


# -- validation and decoding -------------------------------------------------

def validate(info: int) -> None:
    """Raise ValueError unless the word is a canonical element encoding."""
    if info < 0 or info > 0xFFFF:
        raise ValueError("typeInfo out of 16-bit range")
    cats = [b for b in (ACTIVITY, GATEWAY, EVENT) if info & b]
    if len(cats) != 1:
        raise ValueError("exactly one category bit required")
    if info & ACTIVITY:
        if info & (ESP_START | BOUNDARY | KIND_DEFAULT
                   | KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL):
            raise ValueError("event/gateway bits set on an activity")
        shapes = [b for b in (FLAG_A, SUB_PROCESS, CALL_ACTIVITY) if info & b]
        if len(shapes) != 1:
            raise ValueError("activity must be exactly one of task, sub-process, call-activity")
        kinds = [b for b in (KIND_USER_TERMINATE, KIND_SCRIPT_ERROR,
                             KIND_SERVICE_MESSAGE) if info & b]
        if info & FLAG_A:
            if len(kinds) != 1:
                raise ValueError("task needs exactly one task-kind bit")
            if info & (FLAG_B | SEQUENTIAL_MI):
                raise ValueError("multi-instance marker only on sub-process or call-activity")
        elif kinds:
            raise ValueError("task-kind bits on a non-task activity")
        if (info & SEQUENTIAL_MI) and not (info & FLAG_B):
            raise ValueError("sequential flag without multi-instance flag")
    elif info & GATEWAY:
        if info & ~(GATEWAY | FLAG_A | KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL):
            raise ValueError("stray bits on a gateway")
        if not (info & (KIND_EXCLUSIVE_ESCALATION | KIND_PARALLEL_SIGNAL)):
            raise ValueError("gateway needs a kind")
    else:
        if info & (SEQUENTIAL_MI | SUB_PROCESS | CALL_ACTIVITY):
            raise ValueError("activity bits set on an event")
        kinds = [b for b in (KIND_DEFAULT, KIND_USER_TERMINATE, KIND_SCRIPT_ERROR,
                             KIND_SERVICE_MESSAGE, KIND_EXCLUSIVE_ESCALATION,
                             KIND_PARALLEL_SIGNAL) if info & b]
        if len(kinds) != 1:
            raise ValueError("event needs exactly one kind bit")
        if (info & BOUNDARY) and (info & ESP_START):
            raise ValueError("boundary and event-sub-process start are exclusive")
        if (info & FLAG_A) and (info & (BOUNDARY | ESP_START)):
            raise ValueError("boundary/event-sub-process start events are catching")
        if (info & FLAG_B) and not (info & (BOUNDARY | ESP_START)):
            raise ValueError("interrupting flag only on boundary or event-sub-process start")


def describe(info: int) -> dict:
    """Decode a valid word into a symbolic description (inverse of the constructors)."""
    validate(info)
    if info & ACTIVITY:
        multi = ("sequential" if info & SEQUENTIAL_MI else "parallel") if info & FLAG_B else None
        if info & SUB_PROCESS:
            return {"category": "activity", "shape": "subProcess", "multi": multi}
        if info & CALL_ACTIVITY:
            return {"category": "activity", "shape": "callActivity", "multi": multi}
        kind = ("user" if info & KIND_USER_TERMINATE
                else "script" if info & KIND_SCRIPT_ERROR else "service")
        return {"category": "activity", "shape": "task", "kind": kind}
    if info & GATEWAY:
        kind = ("inclusive" if is_inclusive_gateway(info)
                else "exclusive" if is_exclusive_gateway(info) else "parallel")
        return {"category": "gateway", "kind": kind, "join": is_join(info)}
    return {"category": "event", "kind": event_kind(info),
            "throwing": is_throwing(info), "interrupting": is_interrupting(info),
            "boundary": is_boundary(info), "espStart": is_esp_start(info)}


def build(desc: dict) -> int:
    """Inverse of describe()."""
    if desc["category"] == "activity":
        if desc["shape"] == "subProcess":
            return sub_process(desc.get("multi"))
        if desc["shape"] == "callActivity":
            return call_activity(desc.get("multi"))
        return {"user": user_task, "script": script_task,
                "service": service_task}[desc["kind"]]()
    if desc["category"] == "gateway":
        return gateway(desc["kind"], desc["join"])
    return event(desc["kind"], desc["throwing"], desc.get("interrupting", False),
                 desc.get("boundary", False), desc.get("espStart", False))


# -- edge set helpers --------------------------------------------------------

def edge_mask(indexes) -> int:
    mask = 0
    for i in indexes:
        if not 0 <= i < EDGE_LIMIT:
            raise ValueError(f"edge index {i} out of range")
        mask |= 1 << i
    return mask


def mask_bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def lowest_bit(mask: int) -> int:
    return mask & -mask
