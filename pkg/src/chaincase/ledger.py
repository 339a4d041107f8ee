"""Deterministic in-process ledger that hosts the runtime instances.

The ledger is a simulation of a smart-contract platform, not a client for a
real one: a single Python process owns every instance, transactions execute
synchronously under a lock, and costs are metered with a fixed cost model so
that runs are reproducible down to the byte.

Key properties relied on elsewhere:

* transactions get gapless sequence numbers from 0, reverted ones included;
* a reverted transaction leaves instance state, the event log and the set of
  deployed instances exactly as they were (whole call tree rolls back);
* instance addresses derive from (deployer, per-deployer nonce, ledger salt)
  only, so identical submission sequences produce identical ledgers;
* the append-only event log is totally ordered by (txSeq, indexWithinTx).
"""

from __future__ import annotations

import copy
import hashlib
import struct
import threading
from dataclasses import dataclass, field

from . import codec

ZERO_ADDRESS = "0x" + "00" * 20

SNAPSHOT_MAGIC = b"CTPL"
SNAPSHOT_VERSION = 1

MAX_CALL_DEPTH = 256


class Reverted(Exception):
    """Raised inside contract code to abort the enclosing transaction."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class CostModel:
    deploy_base: int = 32000
    deploy_per_byte: int = 200
    storage_write: int = 20000
    storage_read: int = 200
    call_base: int = 700
    event_emit: int = 375

    def as_dict(self) -> dict:
        return {
            "deployBase": self.deploy_base,
            "deployPerByte": self.deploy_per_byte,
            "storageWrite": self.storage_write,
            "storageRead": self.storage_read,
            "callBase": self.call_base,
            "eventEmit": self.event_emit,
        }

    @staticmethod
    def from_dict(d: dict) -> "CostModel":
        return CostModel(
            deploy_base=d["deployBase"],
            deploy_per_byte=d["deployPerByte"],
            storage_write=d["storageWrite"],
            storage_read=d["storageRead"],
            call_base=d["callBase"],
            event_emit=d["eventEmit"],
        )


@dataclass(frozen=True)
class CallContext:
    sender: str      # external account id or instance address
    origin: str      # external account that submitted the transaction
    depth: int = 0

    def nest(self, instance_address: str) -> "CallContext":
        return CallContext(sender=instance_address, origin=self.origin,
                           depth=self.depth + 1)


@dataclass
class LogEvent:
    seq: int
    tx_seq: int
    index: int
    emitter: str
    name: str
    payload: dict

    def as_dict(self) -> dict:
        return {"seq": self.seq, "txSeq": self.tx_seq, "index": self.index,
                "emitter": self.emitter, "name": self.name,
                "payload": self.payload}


@dataclass
class Transaction:
    seq: int
    origin: str
    kind: str                 # "deploy" | "call"
    to: str                   # instance address ("" until a deploy resolves)
    operation: str            # operation name, or instance kind for deploys
    args: bytes
    status: str = "ok"        # "ok" | "reverted"
    reason: str = ""
    cost: int = 0

    def as_dict(self) -> dict:
        return {"seq": self.seq, "origin": self.origin, "kind": self.kind,
                "to": self.to, "operation": self.operation, "args": self.args,
                "status": self.status, "reason": self.reason,
                "cost": self.cost}

    @staticmethod
    def from_dict(d: dict) -> "Transaction":
        return Transaction(seq=d["seq"], origin=d["origin"], kind=d["kind"],
                           to=d["to"], operation=d["operation"],
                           args=d["args"], status=d["status"],
                           reason=d["reason"], cost=d["cost"])


@dataclass
class TxReceipt:
    seq: int
    status: str
    reason: str
    cost: int
    value: object = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class Contract:
    """Base class for ledger-hosted instances.

    All mutable state lives in ``self.s`` as a plain codec-encodable value
    tree; the ledger relies on that for rollback and snapshotting. Operations
    are methods named ``op_<name>`` taking a CallContext first.
    """

    KIND = ""

    def __init__(self, env: "Env", address: str, deployer: str):
        self.env = env
        self.address = address
        self.deployer = deployer
        self.s: dict = {}

    def init(self, ctx: CallContext, init_args: bytes) -> None:
        pass


KINDS: dict[str, type[Contract]] = {}


def register_kind(cls: type[Contract]) -> type[Contract]:
    if not cls.KIND:
        raise ValueError("contract class needs a KIND")
    KINDS[cls.KIND] = cls
    return cls


class Env:
    """Handle through which contract code reaches the ledger."""

    def __init__(self, ledger: "Ledger"):
        self._ledger = ledger

    def call(self, ctx: CallContext, to: str, operation: str, args: list):
        return self._ledger._dispatch(ctx, to, operation, args)

    def deploy(self, ctx: CallContext, sender_address: str, kind: str,
               init_args: bytes) -> str:
        return self._ledger._deploy(ctx.nest(sender_address), kind, init_args)

    def emit(self, emitter: str, name: str, payload: dict) -> None:
        self._ledger._emit(emitter, name, payload)

    def meter_write(self, slots: int = 1) -> None:
        self._ledger._charge(self._ledger.cost_model.storage_write * slots)

    def meter_read(self, slots: int = 1) -> None:
        self._ledger._charge(self._ledger.cost_model.storage_read * slots)

    def instance(self, address: str) -> Contract | None:
        return self._ledger.instances.get(address)


class Ledger:
    def __init__(self, cost_model: CostModel | None = None, salt: int = 0):
        self.cost_model = cost_model or CostModel()
        self.salt = salt & 0xFFFFFFFFFFFFFFFF
        self.instances: dict[str, Contract] = {}
        self.transactions: list[Transaction] = []
        self.events: list[LogEvent] = []
        self.nonces: dict[str, int] = {}
        self.env = Env(self)
        self._lock = threading.RLock()
        # per-transaction scratch, valid only while a tx is executing
        self._tx: Transaction | None = None
        self._tx_events: list[LogEvent] = []
        self._created: list[str] = []

    # -- public entry points -------------------------------------------------

    def deploy(self, account: str, kind: str, init_args: bytes = b"") -> TxReceipt:
        with self._lock:
            tx = self._begin(account, "deploy", "", kind, init_args)
            snap = self._snapshot_state()
            try:
                address = self._deploy(CallContext(sender=account, origin=account),
                                       kind, init_args)
                tx.to = address
                self._commit(tx)
                return TxReceipt(tx.seq, "ok", "", tx.cost, address)
            except Reverted as exc:
                self._rollback(tx, snap, exc.reason)
                return TxReceipt(tx.seq, "reverted", exc.reason, tx.cost)

    def call(self, account: str, to: str, operation: str, args: list) -> TxReceipt:
        with self._lock:
            tx = self._begin(account, "call", to, operation, codec.encode(args))
            snap = self._snapshot_state()
            try:
                ctx = CallContext(sender=account, origin=account)
                value = self._dispatch(ctx, to, operation, args)
                self._commit(tx)
                return TxReceipt(tx.seq, "ok", "", tx.cost, value)
            except Reverted as exc:
                self._rollback(tx, snap, exc.reason)
                return TxReceipt(tx.seq, "reverted", exc.reason, tx.cost)

    def view(self, to: str, op: str, args: list | None = None, account: str = "viewer"):
        """Read-only dispatch: no transaction, no cost, must not mutate."""
        with self._lock:
            ctx = CallContext(sender=account, origin=account)
            return self._dispatch(ctx, to, op, list(args or []))

    def read_log(self, since_seq: int = 0) -> list[LogEvent]:
        with self._lock:
            return list(self.events[max(since_seq, 0):])

    # -- internals -----------------------------------------------------------

    def _begin(self, origin: str, kind: str, to: str, operation: str,
               args: bytes) -> Transaction:
        tx = Transaction(seq=len(self.transactions), origin=origin, kind=kind,
                         to=to, operation=operation, args=args)
        self._tx = tx
        self._tx_events = []
        self._created = []
        return tx

    def _commit(self, tx: Transaction) -> None:
        for ev in self._tx_events:
            ev.seq = len(self.events)
            self.events.append(ev)
        self.transactions.append(tx)
        self._tx = None

    def _rollback(self, tx: Transaction, snap, reason: str) -> None:
        states, nonces = snap
        for addr in self._created:
            self.instances.pop(addr, None)
        for addr, state in states.items():
            self.instances[addr].s = state
        self.nonces = nonces
        tx.status = "reverted"
        tx.reason = reason
        self.transactions.append(tx)
        self._tx = None

    def _snapshot_state(self):
        return ({addr: copy.deepcopy(c.s) for addr, c in self.instances.items()},
                dict(self.nonces))

    def _charge(self, amount: int) -> None:
        if self._tx is not None:
            self._tx.cost += amount

    def _emit(self, emitter: str, name: str, payload: dict) -> None:
        if self._tx is None:
            raise Reverted("NO_TX")
        self._charge(self.cost_model.event_emit)
        self._tx_events.append(LogEvent(seq=-1, tx_seq=self._tx.seq,
                                        index=len(self._tx_events),
                                        emitter=emitter, name=name,
                                        payload=payload))

    def _derive_address(self, deployer: str, nonce: int) -> str:
        digest = hashlib.sha256(codec.encode([deployer, nonce, self.salt])).digest()
        return "0x" + digest[:20].hex()

    def _deploy(self, ctx: CallContext, kind: str, init_args: bytes) -> str:
        if ctx.depth > MAX_CALL_DEPTH:
            raise Reverted("DEPTH")
        cls = KINDS.get(kind)
        if cls is None:
            raise Reverted("UNKNOWN_KIND")
        self._charge(self.cost_model.deploy_base
                     + self.cost_model.deploy_per_byte * len(init_args))
        deployer = ctx.sender
        nonce = self.nonces.get(deployer, 0)
        self.nonces[deployer] = nonce + 1
        address = self._derive_address(deployer, nonce)
        if address in self.instances or address == ZERO_ADDRESS:
            raise Reverted("ADDR_COLLISION")
        instance = cls(self.env, address, deployer)
        self.instances[address] = instance
        self._created.append(address)
        instance.init(ctx, init_args)
        return address

    def _dispatch(self, ctx: CallContext, to: str, operation: str, args: list):
        if ctx.depth > MAX_CALL_DEPTH:
            raise Reverted("DEPTH")
        instance = self.instances.get(to)
        if instance is None:
            raise Reverted("NOT_FOUND")
        method = getattr(instance, "op_" + operation, None)
        if method is None:
            raise Reverted("NOT_FOUND")
        self._charge(self.cost_model.call_base)
        # round-trip through the codec: every argument list must be canonical
        args = codec.decode(codec.encode(list(args)))
        return method(ctx, *args)

    # -- snapshot file format --------------------------------------------

    def to_snapshot(self) -> bytes:
        with self._lock:
            body = codec.encode({
                "costModel": self.cost_model.as_dict(),
                "salt": self.salt,
                "nonces": self.nonces,
                "instances": [
                    {"kind": c.KIND, "address": c.address,
                     "deployer": c.deployer, "state": c.s}
                    for c in self.instances.values()
                ],
                "transactions": [t.as_dict() for t in self.transactions],
                "events": [e.as_dict() for e in self.events],
            })
            return SNAPSHOT_MAGIC + struct.pack(">H", SNAPSHOT_VERSION) + body

    @staticmethod
    def from_snapshot(data: bytes) -> "Ledger":
        if data[:4] != SNAPSHOT_MAGIC:
            raise ValueError("not a ledger snapshot (bad magic)")
        version = struct.unpack_from(">H", data, 4)[0]
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        tree = codec.decode(data[6:])
        ledger = Ledger(cost_model=CostModel.from_dict(tree["costModel"]),
                        salt=tree["salt"])
        ledger.nonces = dict(tree["nonces"])
        for rec in tree["instances"]:
            cls = KINDS.get(rec["kind"])
            if cls is None:
                raise ValueError(f"snapshot references unknown kind {rec['kind']!r}")
            inst = cls(ledger.env, rec["address"], rec["deployer"])
            inst.s = rec["state"]
            ledger.instances[rec["address"]] = inst
        ledger.transactions = [Transaction.from_dict(t) for t in tree["transactions"]]
        ledger.events = [LogEvent(seq=e["seq"], tx_seq=e["txSeq"], index=e["index"],
                                  emitter=e["emitter"], name=e["name"],
                                  payload=e["payload"])
                         for e in tree["events"]]
        return ledger

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_snapshot())

    @staticmethod
    def load(path: str) -> "Ledger":
        with open(path, "rb") as fh:
            return Ledger.from_snapshot(fh.read())
