"""Command handlers for the command-line front end."""

from src.handlers.commands import CommandContext

__all__ = ["CommandContext"]
