"""Seeded generator of small block-structured process models.

Produces matched pairs: the XML document fed to the engine and the plain
structural description fed to the oracle simulator. Routing decisions at
exclusive splits and error outcomes inside sub-processes are decided at
generation time and baked into both representations (constant guards on
the XML side, a "take" edge on the oracle side), so both executions are
fully deterministic and comparable step by step.

Budget accounting: every flow node in every scope spends one unit at
creation; composite blocks are only offered when the remaining budget
covers their minimum footprint, and multi-branch blocks park one unit per
pending sibling branch so no branch can starve another below its minimum.
That keeps the total node count at or under the requested maximum.
"""

from __future__ import annotations

import random

HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" '
    'targetNamespace="http://example.test/generated">\n'
)


class _Gen:
    def __init__(self, rng: random.Random, max_nodes: int):
        self.rng = rng
        self.budget = max_nodes
        self.seq = 0
        self.errors: list[str] = []
        # scopeId -> {"elements": [(id, xml)], "edges": [...], "defaults": {}}
        self.xml_scopes: dict[str, dict] = {}
        self.oracle_scopes: dict[str, dict] = {}

    def fresh(self, prefix: str) -> str:
        self.seq += 1
        return f"{prefix}{self.seq}"

    def spend(self, n: int) -> None:
        self.budget -= n
        assert self.budget >= 0, "generator budget overdrawn"

    # -- scope assembly ------------------------------------------------------

    def new_scope(self, scope_id: str) -> None:
        self.xml_scopes[scope_id] = {"elements": [], "edges": [],
                                     "defaults": {}}
        self.oracle_scopes[scope_id] = {"elements": {}, "edges": {}}

    def put(self, scope: str, elem_id: str, xml: str, oracle: dict) -> None:
        self.xml_scopes[scope]["elements"].append((elem_id, xml))
        self.oracle_scopes[scope]["elements"][elem_id] = oracle

    def connect(self, scope: str, src: str, dst: str,
                guard: str | None = None) -> str:
        edge = self.fresh("e")
        self.xml_scopes[scope]["edges"].append((edge, src, dst, guard))
        self.oracle_scopes[scope]["edges"][edge] = [src, dst]
        return edge

    # -- blocks --------------------------------------------------------------
    # Each gen_* returns (entry element, exit element) and is wired by the
    # caller. gen_block requires budget >= 1 on entry.

    def gen_task(self, scope: str) -> tuple[str, str]:
        self.spend(1)
        elem = self.fresh("n")
        if self.rng.random() < 0.5:
            self.put(scope, elem, f'<userTask id="{elem}" name="{elem}"/>',
                     {"kind": "user"})
        else:
            self.put(scope, elem,
                     f'<scriptTask id="{elem}"><script></script></scriptTask>',
                     {"kind": "script"})
        return elem, elem

    def gen_gateway_block(self, scope: str, depth: int,
                          exclusive: bool) -> tuple[str, str]:
        self.spend(2)
        split, join = self.fresh("n"), self.fresh("n")
        tag = "exclusiveGateway" if exclusive else "parallelGateway"
        kind = "xor" if exclusive else "and"
        self.put(scope, split, f'<{tag} id="{split}"/>', {"kind": kind})
        self.put(scope, join, f'<{tag} id="{join}"/>', {"kind": kind})
        taken = self.rng.randrange(2)
        take_edge = None
        for i in range(2):
            park = 1 - i  # reserve a node for the remaining branch
            self.spend(park)
            entry, exit_ = self.gen_block(scope, depth + 1)
            self.budget += park
            guard = None
            if exclusive and i == 0:
                guard = "true" if taken == 0 else "false"
            edge = self.connect(scope, split, entry, guard)
            if i == taken:
                take_edge = edge
            if exclusive and i == 1:
                self.xml_scopes[scope]["defaults"][split] = edge
            self.connect(scope, exit_, join)
        if exclusive:
            self.oracle_scopes[scope]["elements"][split]["take"] = take_edge
        return split, join

    def gen_sub(self, scope: str, depth: int) -> tuple[str, str]:
        throws = self.budget >= 7 and self.rng.random() < 0.4
        park = 3 if throws else 0  # boundary + handler + its end
        self.spend(3 + park)  # sub container + child start + child end
        sub = self.fresh("n")
        child = sub  # scope id mirrors the container element id
        self.new_scope(child)
        start, end = self.fresh("n"), self.fresh("n")
        self.put(child, start, f'<startEvent id="{start}"/>', {"kind": "start"})
        entry, exit_ = self.gen_block(child, depth + 1)
        self.connect(child, start, entry)
        if throws:
            code = self.fresh("ERR")
            self.errors.append(code)
            self.put(child, end,
                     f'<endEvent id="{end}">'
                     f'<errorEventDefinition errorRef="{code}def"/></endEvent>',
                     {"kind": "error-end", "code": code})
        else:
            self.put(child, end, f'<endEvent id="{end}"/>', {"kind": "end"})
        self.connect(child, exit_, end)

        body = "".join(self._finished_elements(child)) + self._edge_xml(child)
        self.put(scope, sub, f'<subProcess id="{sub}">{body}</subProcess>',
                 {"kind": "sub", "child": child})

        if throws:
            self.budget += park
            self.spend(3)
            # the handler path merges back so downstream joins still fire
            boundary, handler, merge = (self.fresh("n") for _ in range(3))
            self.put(scope, boundary,
                     f'<boundaryEvent id="{boundary}" attachedToRef="{sub}">'
                     f'<errorEventDefinition errorRef="{code}def"/>'
                     f'</boundaryEvent>',
                     {"kind": "boundary", "attached": sub, "code": code})
            self.put(scope, handler,
                     f'<scriptTask id="{handler}"><script></script>'
                     f'</scriptTask>', {"kind": "script"})
            self.put(scope, merge, f'<exclusiveGateway id="{merge}"/>',
                     {"kind": "xor"})
            self.connect(scope, boundary, handler)
            self.connect(scope, handler, merge)
            self.connect(scope, sub, merge)
            return sub, merge
        return sub, sub

    def gen_block(self, scope: str, depth: int) -> tuple[str, str]:
        assert self.budget >= 1
        options = ["task"]
        if depth < 3 and self.budget >= 4:
            options += ["xor", "and"]
        if depth < 2 and self.budget >= 4:
            options.append("sub")
        kind = self.rng.choice(options)
        if kind == "task":
            entry, exit_ = self.gen_task(scope)
        elif kind == "sub":
            entry, exit_ = self.gen_sub(scope, depth)
        else:
            entry, exit_ = self.gen_gateway_block(scope, depth,
                                                  exclusive=(kind == "xor"))
        if self.budget >= 1 and self.rng.random() < 0.4:
            entry2, exit2 = self.gen_block(scope, depth)
            self.connect(scope, exit_, entry2)
            return entry, exit2
        return entry, exit_

    # -- rendering -----------------------------------------------------------

    def _edge_xml(self, scope: str) -> str:
        out = []
        for edge, src, dst, guard in self.xml_scopes[scope]["edges"]:
            if guard is not None:
                out.append(
                    f'<sequenceFlow id="{edge}" sourceRef="{src}" '
                    f'targetRef="{dst}"><conditionExpression>{guard}'
                    f'</conditionExpression></sequenceFlow>')
            else:
                out.append(f'<sequenceFlow id="{edge}" sourceRef="{src}" '
                           f'targetRef="{dst}"/>')
        return "".join(out)

    def _finished_elements(self, scope: str) -> list[str]:
        defaults = self.xml_scopes[scope]["defaults"]
        out = []
        for elem_id, xml in self.xml_scopes[scope]["elements"]:
            if elem_id in defaults:
                xml = xml.replace("/>", f' default="{defaults[elem_id]}"/>')
            out.append(xml)
        return out

    def render(self, root_scope: str) -> str:
        parts = [HEADER]
        for code in self.errors:
            parts.append(f'<error id="{code}def" errorCode="{code}"/>\n')
        parts.append(f'<process id="{root_scope}">\n')
        parts.extend(f"  {x}\n" for x in self._finished_elements(root_scope))
        parts.append(f"  {self._edge_xml(root_scope)}\n")
        parts.append("</process>\n</definitions>\n")
        return "".join(parts)


def count_nodes(model: dict) -> int:
    return sum(len(s["elements"]) for s in model["scopes"].values())


def generate(rng: random.Random, max_nodes: int = 12) -> tuple[str, dict]:
    """Return (xml, oracle_model) for one random model."""
    gen = _Gen(rng, max_nodes)
    root = "proc"
    gen.new_scope(root)
    gen.spend(2)
    start, end = gen.fresh("n"), gen.fresh("n")
    gen.put(root, start, f'<startEvent id="{start}"/>', {"kind": "start"})
    entry, exit_ = gen.gen_block(root, 0)
    gen.put(root, end, f'<endEvent id="{end}"/>', {"kind": "end"})
    gen.connect(root, start, entry)
    gen.connect(root, exit_, end)

    xml = gen.render(root)
    model = {"root": root, "scopes": gen.oracle_scopes}
    assert count_nodes(model) <= max_nodes
    return xml, model
