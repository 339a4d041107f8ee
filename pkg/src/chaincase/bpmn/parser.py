"""Process document parsing.

Reads the executable subset: user/script/service tasks, exclusive, parallel
and inclusive gateways, none/message/error/escalation/signal/terminate
events, embedded and event sub-processes, call activities and multi-instance
markers. Anything else (timers, compensation, event-based gateways, plain
tasks) raises ModelError("UNSUPPORTED") rather than silently misexecuting.

Scripted behaviour rides in documentation text:

* a process or sub-process documents its variables as `type name;` lines and
  may declare swimlane roles with a `@roles a, b` line;
* user and service tasks document a check-in annotation
  `(exports) : (imports) -> { body }` plus an optional `@role name` line;
* script tasks carry a plain statement program (a `script` child wins over
  documentation);
* sequence flows out of exclusive or inclusive gateways carry their guard in
  `conditionExpression`, with the gateway's `default` attribute naming the
  fallback edge.
"""

from __future__ import annotations

import hashlib
import io
import xml.etree.ElementTree as ET

from .. import scriptdsl
from .. import typeinfo as ti
from .model import ElementDef, ModelError, ParsedModel, ParsedScope

ZERO_CODE = b"\x00" * 32

_TASK_TAGS = {"userTask", "scriptTask", "serviceTask"}
_GATEWAY_TAGS = {"exclusiveGateway", "parallelGateway", "inclusiveGateway"}
_EVENT_TAGS = {"startEvent", "endEvent", "intermediateThrowEvent",
               "intermediateCatchEvent", "boundaryEvent"}
_NODE_TAGS = _TASK_TAGS | _GATEWAY_TAGS | _EVENT_TAGS | {"subProcess",
                                                         "callActivity"}
_IGNORED_TAGS = {"documentation", "extensionElements", "laneSet",
                 "dataObject", "dataObjectReference", "dataStoreReference",
                 "textAnnotation", "association", "incoming", "outgoing",
                 "multiInstanceLoopCharacteristics", "script", "ioSpecification"}
_REJECTED_TAGS = {"task", "sendTask", "receiveTask", "manualTask",
                  "businessRuleTask", "eventBasedGateway", "complexGateway",
                  "transaction", "adHocSubProcess"}
_DEFINITION_KIND = {
    "errorEventDefinition": "error",
    "escalationEventDefinition": "escalation",
    "signalEventDefinition": "signal",
    "messageEventDefinition": "message",
    "terminateEventDefinition": "terminate",
}
_REJECTED_DEFINITIONS = {"timerEventDefinition", "compensateEventDefinition",
                         "conditionalEventDefinition", "linkEventDefinition",
                         "cancelEventDefinition"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _truthy(value: str | None, default: bool) -> bool:
    if value is None:
        return default
    return value.strip().lower() == "true"


def _documentation(elem: ET.Element) -> str:
    parts = [child.text or "" for child in elem if _local(child.tag) == "documentation"]
    return "\n".join(parts).strip()


def _split_directives(text: str) -> tuple[dict[str, str], str]:
    """Peel leading `@key value` lines off a documentation block."""
    directives: dict[str, str] = {}
    rest: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not rest and stripped.startswith("@"):
            key, _, value = stripped[1:].partition(" ")
            directives[key] = value.strip()
        elif stripped or rest:
            rest.append(line)
    return directives, "\n".join(rest).strip()


def evt_code_for(code: str | None) -> bytes:
    """32-byte event code: a hash of the symbolic code, zero when unnamed."""
    if not code:
        return ZERO_CODE
    return hashlib.sha256(code.encode("utf-8")).digest()


def model_hash_for(xml_source: str) -> str:
    canon = ET.canonicalize(xml_source)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class _CodeTable:
    """Resolves event definition refs to their symbolic codes."""

    def __init__(self, definitions: ET.Element):
        self.codes: dict[str, str] = {}
        for child in definitions.iter():
            tag = _local(child.tag)
            ident = child.get("id")
            if not ident:
                continue
            if tag == "error":
                self.codes[ident] = child.get("errorCode") or ""
            elif tag == "escalation":
                self.codes[ident] = child.get("escalationCode") or ""
            elif tag in ("signal", "message"):
                self.codes[ident] = child.get("name") or ""

    def resolve(self, definition: ET.Element) -> bytes:
        tag = _local(definition.tag)
        ref_attr = {"errorEventDefinition": "errorRef",
                    "escalationEventDefinition": "escalationRef",
                    "signalEventDefinition": "signalRef",
                    "messageEventDefinition": "messageRef"}.get(tag)
        if ref_attr is None:
            return ZERO_CODE
        ref = definition.get(ref_attr)
        if ref is None:
            return ZERO_CODE
        if ref not in self.codes:
            raise ModelError("NOT_FOUND", f"unresolved event ref {ref!r}")
        return evt_code_for(self.codes[ref])


def _event_definition(elem: ET.Element) -> tuple[str, ET.Element | None]:
    found = []
    for child in elem:
        tag = _local(child.tag)
        if tag in _REJECTED_DEFINITIONS:
            raise ModelError("UNSUPPORTED", f"{tag} on {elem.get('id')}")
        if tag in _DEFINITION_KIND:
            found.append((_DEFINITION_KIND[tag], child))
    if not found:
        return "default", None
    if len(found) > 1:
        raise ModelError("UNSUPPORTED",
                         f"multiple event definitions on {elem.get('id')}")
    return found[0]


def parse_model(xml_source: str) -> ParsedModel:
    try:
        tree = ET.parse(io.StringIO(xml_source))
    except ET.ParseError as exc:
        raise ModelError("UNSUPPORTED", f"not well-formed: {exc}")
    definitions = tree.getroot()
    if _local(definitions.tag) != "definitions":
        raise ModelError("UNSUPPORTED", "missing definitions root")
    codes = _CodeTable(definitions)

    processes = [c for c in definitions if _local(c.tag) == "process"]
    if not processes:
        raise ModelError("NOT_FOUND", "no process element")
    scopes: dict[str, ParsedScope] = {}
    for proc in processes:
        _parse_scope(proc, codes, scopes)
    root_id = processes[0].get("id") or ""
    # call activities reference sibling processes; resolve after the walk
    for scope in scopes.values():
        for e_ind, target in list(scope.children.items()):
            if target.startswith("\x00call:"):
                called = target[len("\x00call:"):]
                if called not in scopes:
                    raise ModelError("NOT_FOUND",
                                     f"called process {called!r} not defined")
                scope.children[e_ind] = called
    return ParsedModel(model_hash=model_hash_for(xml_source), root=root_id,
                       scopes=scopes, xml=xml_source)


def _parse_scope(elem: ET.Element, codes: _CodeTable,
                 scopes: dict[str, ParsedScope], esp_body: bool = False) -> str:
    scope_id = elem.get("id")
    if not scope_id:
        raise ModelError("UNSUPPORTED", "scope without id")
    if scope_id in scopes:
        raise ModelError("UNSUPPORTED", f"duplicate scope id {scope_id!r}")
    scope = ParsedScope(scope_id=scope_id, name=elem.get("name") or "")
    scopes[scope_id] = scope

    directives, decls = _split_directives(_documentation(elem))
    if "roles" in directives:
        scope.declared_roles = [r.strip() for r in directives["roles"].split(",")
                                if r.strip()]
    try:
        scope.variables = scriptdsl.parse_declarations(decls)
    except scriptdsl.ScriptParseError as exc:
        raise ModelError("UNSUPPORTED", f"bad declarations in {scope_id}: {exc}")

    nodes: list[tuple[int, ET.Element, str]] = []
    flows: list[ET.Element] = []
    next_ind = 1
    for child in elem:
        tag = _local(child.tag)
        if tag == "sequenceFlow":
            flows.append(child)
            continue
        if tag in _IGNORED_TAGS:
            continue
        if tag in _REJECTED_TAGS or tag not in _NODE_TAGS:
            raise ModelError("UNSUPPORTED", f"{tag} in {scope_id}")
        if next_ind >= ti.EDGE_LIMIT:
            raise ModelError("TOO_LARGE", f"{scope_id} has too many elements")
        nodes.append((next_ind, child, tag))
        xml_id = child.get("id")
        if not xml_id:
            raise ModelError("UNSUPPORTED", f"{tag} without id in {scope_id}")
        if xml_id in scope.element_index:
            raise ModelError("UNSUPPORTED", f"duplicate id {xml_id!r}")
        scope.element_index[xml_id] = next_ind
        next_ind += 1
        # an event sub-process exposes its start trigger alongside the body
        if tag == "subProcess" and _truthy(child.get("triggeredByEvent"), False):
            if next_ind >= ti.EDGE_LIMIT:
                raise ModelError("TOO_LARGE", f"{scope_id} has too many elements")
            nodes.append((next_ind, child, "\x00espStart"))
            scope.element_index[xml_id + "#start"] = next_ind
            next_ind += 1

    edge_bits: dict[str, tuple[int, ET.Element]] = {}
    for i, flow in enumerate(flows, start=1):
        if i >= ti.EDGE_LIMIT:
            raise ModelError("TOO_LARGE", f"{scope_id} has too many flows")
        flow_id = flow.get("id") or f"{scope_id}-flow-{i}"
        scope.edge_index[flow_id] = i
        edge_bits[flow_id] = (i, flow)

    pre_c: dict[int, int] = {}
    post_c: dict[int, int] = {}
    guards: dict[int, list[tuple[int, str | None]]] = {}
    for flow_id, (edge, flow) in edge_bits.items():
        src, dst = flow.get("sourceRef"), flow.get("targetRef")
        if src not in scope.element_index or dst not in scope.element_index:
            raise ModelError("NOT_FOUND",
                             f"sequence flow {flow_id} endpoint outside {scope_id}")
        s_ind, d_ind = scope.element_index[src], scope.element_index[dst]
        post_c[s_ind] = post_c.get(s_ind, 0) | (1 << edge)
        pre_c[d_ind] = pre_c.get(d_ind, 0) | (1 << edge)
        cond = None
        for sub in flow:
            if _local(sub.tag) == "conditionExpression":
                cond = (sub.text or "").strip() or None
        guards.setdefault(s_ind, []).append((edge, cond))

    for e_ind, node, tag in nodes:
        if tag == "\x00espStart":
            scope.elements[e_ind] = _esp_start_def(e_ind, node, codes,
                                                   scope.element_index[node.get("id")])
            continue
        xml_id = node.get("id")
        definition = ElementDef(e_ind=e_ind, xml_id=xml_id,
                                name=node.get("name") or "",
                                type_info=0,
                                pre_c=pre_c.get(e_ind, 0),
                                post_c=post_c.get(e_ind, 0))
        if tag in _TASK_TAGS:
            _fill_task(definition, node, tag, scope)
        elif tag in _GATEWAY_TAGS:
            _fill_gateway(definition, node, tag, scope, guards.get(e_ind, []))
        elif tag in ("subProcess", "callActivity"):
            _fill_activity_scope(definition, node, tag, scope, scopes, codes)
        else:
            _fill_event(definition, node, tag, scope, codes, esp_body)
        scope.elements[e_ind] = definition
    return scope_id


def _multi_instance(node: ET.Element) -> tuple[str | None, int]:
    for child in node:
        if _local(child.tag) != "multiInstanceLoopCharacteristics":
            continue
        multi = "sequential" if _truthy(child.get("isSequential"), False) \
            else "parallel"
        count = 1
        for sub in child:
            if _local(sub.tag) == "loopCardinality":
                text = (sub.text or "").strip()
                if not text.isdigit() or int(text) < 1:
                    raise ModelError("UNSUPPORTED",
                                     f"loop cardinality {text!r} on {node.get('id')}")
                count = int(text)
        return multi, count
    return None, 1


def _fill_task(defn: ElementDef, node: ET.Element, tag: str,
               scope: ParsedScope) -> None:
    if tag == "scriptTask":
        defn.type_info = ti.script_task()
        body = None
        for child in node:
            if _local(child.tag) == "script":
                body = (child.text or "").strip()
        if body is None:
            body = _documentation(node)
        try:
            scriptdsl.parse_program(body)
        except scriptdsl.ScriptParseError as exc:
            raise ModelError("UNSUPPORTED", f"bad script on {defn.xml_id}: {exc}")
        scope.scripts[defn.e_ind] = body
        return
    defn.type_info = ti.user_task() if tag == "userTask" else ti.service_task()
    directives, text = _split_directives(_documentation(node))
    if "role" in directives and directives["role"]:
        scope.roles[defn.e_ind] = directives["role"]
    if text:
        try:
            ann = scriptdsl.parse_annotation(text)
        except scriptdsl.ScriptParseError as exc:
            raise ModelError("UNSUPPORTED",
                             f"bad annotation on {defn.xml_id}: {exc}")
        scope.checkins[defn.e_ind] = {"imports": [list(p) for p in ann.imports],
                                      "body": ann.body}
        if ann.exports:
            scope.checkouts[defn.e_ind] = [list(p) for p in ann.exports]
    else:
        scope.checkins[defn.e_ind] = {"imports": [], "body": ""}


def _fill_gateway(defn: ElementDef, node: ET.Element, tag: str,
                  scope: ParsedScope,
                  outgoing: list[tuple[int, str | None]]) -> None:
    kind = {"exclusiveGateway": "exclusive", "parallelGateway": "parallel",
            "inclusiveGateway": "inclusive"}[tag]
    incoming = ti.mask_bits(defn.pre_c)
    join = len(incoming) > 1
    defn.type_info = ti.gateway(kind, join=join)
    if kind == "parallel" or join:
        for _, guard in outgoing:
            if guard is not None:
                raise ModelError("UNSUPPORTED",
                                 f"guard on non-splitting flow of {defn.xml_id}")
        return
    default_edge = None
    default_ref = node.get("default")
    if default_ref is not None:
        if default_ref not in scope.edge_index:
            raise ModelError("NOT_FOUND",
                             f"default flow {default_ref!r} of {defn.xml_id}")
        default_edge = scope.edge_index[default_ref]
        if not (defn.post_c >> default_edge) & 1:
            raise ModelError("BAD_ATTACH",
                             f"default flow of {defn.xml_id} is not outgoing")
    edges = sorted((e, g) for e, g in outgoing if e != default_edge)
    for edge, guard in edges:
        if guard is None:
            continue
        try:
            expr = scriptdsl.parse_expression(guard)
            if scriptdsl.check_expression(
                    expr, {n: t for t, n in scope.variables}) != "bool":
                raise ModelError("UNSUPPORTED",
                                 f"guard on edge {edge} of {defn.xml_id} is not bool")
        except scriptdsl.ScriptParseError as exc:
            raise ModelError("UNSUPPORTED",
                             f"bad guard on {defn.xml_id}: {exc}")
        except scriptdsl.ScriptTypeError as exc:
            raise ModelError("UNSUPPORTED", f"guard on {defn.xml_id}: {exc}")
    scope.gateways[defn.e_ind] = {"edges": [[e, g] for e, g in edges],
                                  "default": default_edge}


def _fill_activity_scope(defn: ElementDef, node: ET.Element, tag: str,
                         scope: ParsedScope, scopes: dict[str, ParsedScope],
                         codes: _CodeTable) -> None:
    multi, count = _multi_instance(node)
    defn.count_inst = count
    if tag == "callActivity":
        defn.type_info = ti.call_activity(multi)
        called = node.get("calledElement")
        if not called:
            raise ModelError("NOT_FOUND", f"{defn.xml_id} calls nothing")
        scope.children[defn.e_ind] = "\x00call:" + called
        return
    defn.type_info = ti.sub_process(multi)
    if _truthy(node.get("triggeredByEvent"), False):
        if defn.pre_c or defn.post_c:
            raise ModelError("BAD_ATTACH",
                             f"event sub-process {defn.xml_id} wired into flow")
        if multi is not None:
            raise ModelError("UNSUPPORTED",
                             f"multi-instance event sub-process {defn.xml_id}")
    child_id = _parse_scope(node, codes, scopes,
                            esp_body=_truthy(node.get("triggeredByEvent"), False))
    scope.children[defn.e_ind] = child_id


def _fill_event(defn: ElementDef, node: ET.Element, tag: str,
                scope: ParsedScope, codes: _CodeTable,
                esp_body: bool = False) -> None:
    kind, definition = _event_definition(node)
    if definition is not None:
        defn.evt_code = codes.resolve(definition)
    if tag == "startEvent":
        # the trigger of an event sub-process start lives on the parent-side
        # marker; inside the body it behaves as a plain start
        if kind != "default" and not esp_body:
            raise ModelError("UNSUPPORTED",
                             f"{kind} start event {defn.xml_id} outside an "
                             "event sub-process")
        defn.type_info = ti.event("default", throwing=False)
        defn.evt_code = ZERO_CODE
    elif tag == "endEvent":
        if defn.post_c:
            raise ModelError("UNSUPPORTED", f"end event {defn.xml_id} has "
                                            "outgoing flow")
        defn.type_info = ti.event(kind, throwing=True)
    elif tag == "intermediateThrowEvent":
        if kind in ("error", "terminate"):
            raise ModelError("UNSUPPORTED",
                             f"{kind} on intermediate throw {defn.xml_id}")
        defn.type_info = ti.event(kind, throwing=True)
    elif tag == "intermediateCatchEvent":
        if kind not in ("message", "signal"):
            raise ModelError("UNSUPPORTED",
                             f"{kind} on intermediate catch {defn.xml_id}")
        defn.type_info = ti.event(kind, throwing=False)
        # delivery happens through an empty check-in on the catch element
        scope.checkins.setdefault(defn.e_ind, {"imports": [], "body": ""})
    else:
        if kind not in ("error", "escalation", "signal"):
            raise ModelError("UNSUPPORTED",
                             f"{kind} boundary event {defn.xml_id}")
        attached_ref = node.get("attachedToRef")
        if attached_ref not in scope.element_index:
            raise ModelError("BAD_ATTACH",
                             f"boundary {defn.xml_id} attached to nothing")
        if defn.pre_c:
            raise ModelError("BAD_ATTACH",
                             f"boundary {defn.xml_id} has incoming flow")
        defn.attached_to = scope.element_index[attached_ref]
        interrupting = _truthy(node.get("cancelActivity"), True)
        defn.type_info = ti.event(kind, throwing=False,
                                  interrupting=interrupting, boundary=True)


def _esp_start_def(e_ind: int, sub_proc: ET.Element, codes: _CodeTable,
                   body_ind: int) -> ElementDef:
    starts = [c for c in sub_proc if _local(c.tag) == "startEvent"]
    if len(starts) != 1:
        raise ModelError("UNSUPPORTED",
                         f"event sub-process {sub_proc.get('id')} needs exactly "
                         "one start event")
    start = starts[0]
    kind, definition = _event_definition(start)
    if kind not in ("error", "escalation", "signal"):
        raise ModelError("UNSUPPORTED",
                         f"{kind} start on event sub-process {sub_proc.get('id')}")
    interrupting = _truthy(start.get("isInterrupting"), True)
    info = ti.event(kind, throwing=False, interrupting=interrupting,
                    esp_start=True)
    evt_code = codes.resolve(definition) if definition is not None else ZERO_CODE
    return ElementDef(e_ind=e_ind, xml_id=(sub_proc.get("id") or "") + "#start",
                      name=start.get("name") or "", type_info=info,
                      evt_code=evt_code, attached_to=body_ind)
