"""Parsed process model structures.

A model document is flattened into one scope per process or embedded
sub-process. Every scope numbers its flow nodes and sequence flows from 1 in
document order; those indexes are what the on-ledger registries store, so the
maps here are the bridge between XML ids and runtime state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import datanode


class ModelError(ValueError):
    """Raised for documents the engine cannot execute.

    `reason` carries the short revert-style code (UNSUPPORTED, TOO_LARGE,
    NOT_FOUND, BAD_ATTACH) so the service layer can map it to a status.
    """

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


@dataclass
class ElementDef:
    e_ind: int
    xml_id: str
    name: str
    type_info: int
    pre_c: int = 0
    post_c: int = 0
    evt_code: bytes = b"\x00" * 32
    attached_to: int = 0
    count_inst: int = 1


@dataclass
class ParsedScope:
    scope_id: str
    name: str = ""
    elements: dict[int, ElementDef] = field(default_factory=dict)
    element_index: dict[str, int] = field(default_factory=dict)
    edge_index: dict[str, int] = field(default_factory=dict)
    variables: list[tuple[str, str]] = field(default_factory=list)
    scripts: dict[int, str] = field(default_factory=dict)
    gateways: dict[int, dict] = field(default_factory=dict)
    checkins: dict[int, dict] = field(default_factory=dict)
    checkouts: dict[int, list] = field(default_factory=dict)
    roles: dict[int, str] = field(default_factory=dict)
    declared_roles: list[str] = field(default_factory=list)
    children: dict[int, str] = field(default_factory=dict)

    def blueprint(self) -> dict:
        return datanode.blueprint(
            variables=self.variables,
            scripts=self.scripts,
            gateways=self.gateways,
            checkins=self.checkins,
            checkouts=self.checkouts,
            roles=self.roles,
        )


@dataclass
class ParsedModel:
    model_hash: str
    root: str
    scopes: dict[str, ParsedScope]
    xml: str

    def scope(self, scope_id: str) -> ParsedScope:
        return self.scopes[scope_id]

    def index_maps(self) -> dict:
        """JSON-able id-to-index maps for every scope."""
        return {
            sid: {
                "elements": dict(sorted(s.element_index.items())),
                "edges": dict(sorted(s.edge_index.items())),
            }
            for sid, s in self.scopes.items()
        }
