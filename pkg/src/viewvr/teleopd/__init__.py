"""Executable surface: CLI, live service, console bridge."""

from .cli import cli_run, main
from .service import ServiceConfig, ServiceMode, TeleopService
from .wsbridge import WebSocketServer, WsClient

__all__ = ["ServiceConfig", "ServiceMode", "TeleopService", "WebSocketServer", "WsClient", "cli_run", "main"]
