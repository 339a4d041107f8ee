from .model import ElementDef, ModelError, ParsedModel, ParsedScope
from .parser import evt_code_for, model_hash_for, parse_model
from .plan import PlanError, PlanExecution, build_plan, execute_plan

__all__ = [
    "ElementDef",
    "ModelError",
    "ParsedModel",
    "ParsedScope",
    "PlanError",
    "PlanExecution",
    "build_plan",
    "evt_code_for",
    "execute_plan",
    "model_hash_for",
    "parse_model",
]
