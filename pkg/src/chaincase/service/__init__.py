from .app import create_app
from .runtime import Runtime

__all__ = ["Runtime", "create_app"]
