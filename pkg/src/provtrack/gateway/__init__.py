"""User-facing surface: HTTP gateway and CLI."""

from .app import create_app, serve
from .cli import cli_run, main

__all__ = ["cli_run", "create_app", "main", "serve"]
