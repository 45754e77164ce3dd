from .api import create_app
from .manager import ServiceConfig, SessionManager, Subscriber, UnknownSessionError
from .protocol import ControlProtocol, parse_adaptation, stdio_loop

__all__ = [
    "ControlProtocol",
    "ServiceConfig",
    "SessionManager",
    "Subscriber",
    "UnknownSessionError",
    "create_app",
    "parse_adaptation",
    "stdio_loop",
]
