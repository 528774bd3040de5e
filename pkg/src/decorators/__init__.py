"""Decorators for command handlers."""

from src.decorators.error_handling import handles_errors

__all__ = ["handles_errors"]
