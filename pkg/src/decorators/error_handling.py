"""Error handling decorator for command handlers.

Domain errors become an exit code and a one-line JSON error record on stderr.
"""

import json
import logging
import sys
from functools import wraps
from typing import Callable

from src.exceptions import CarnotError

logger = logging.getLogger(__name__)


def error_record(error: BaseException, exit_code: int) -> str:
    """Machine-readable error record."""
    return json.dumps(
        {"error": type(error).__name__, "exit_code": exit_code, "message": str(error)},
        sort_keys=True,
    )


def handles_errors(func: Callable[..., int]) -> Callable[..., int]:
    """Decorator turning exceptions raised by a command handler into exit codes.

    CarnotError subclasses map to their exit_code; anything else is logged
    with its traceback and maps to 1.

    Args:
        func: Command handler returning an exit code

    Returns:
        Wrapped handler

    Example:
        @handles_errors
        def excess_command(args, context):
            ...
            return 0
    """

    @wraps(func)
    def wrapped(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except CarnotError as e:
            logger.error(f"{func.__name__} failed: {e}")
            print(error_record(e, e.exit_code), file=sys.stderr)
            return e.exit_code
        except Exception as e:
            logger.error(f"{func.__name__} failed unexpectedly: {e}", exc_info=True)
            print(error_record(e, 1), file=sys.stderr)
            return 1

    return wrapped
