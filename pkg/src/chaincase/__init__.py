"""Process execution on a tamper-evident ledger.

A single interpreter contract runs bitmap-encoded process models. Control
flow lives in flow-node registries, per-case data in data-node instances,
and the whole thing is driven either directly through the ledger or over the
bundled HTTP service.
"""

from .ledger import (
    CallContext,
    Contract,
    CostModel,
    Ledger,
    LogEvent,
    Reverted,
    Transaction,
    TxReceipt,
    ZERO_ADDRESS,
)

# importing the contract modules registers their kinds with the ledger
from . import access as _access
from . import datanode as _datanode
from . import flownode as _flownode
from . import interpreter as _interpreter

from .access import AccessControl
from .datanode import DataNode, Factory, blueprint
from .flownode import FlowNode
from .interpreter import Interpreter

__version__ = "0.1.0"

__all__ = [
    "AccessControl",
    "CallContext",
    "Contract",
    "CostModel",
    "DataNode",
    "Factory",
    "FlowNode",
    "Interpreter",
    "Ledger",
    "LogEvent",
    "Reverted",
    "Transaction",
    "TxReceipt",
    "ZERO_ADDRESS",
    "blueprint",
]
