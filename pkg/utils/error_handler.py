"""
Error types and the CLI-facing error handler
Better error messages with solutions, mapped to process exit codes
"""

from typing import Optional, Dict
import logging

logger = logging.getLogger(__name__)


class LiftPoolError(Exception):
    """Base class for every error raised by this package"""


class ShapeError(LiftPoolError):
    """Tensor shapes or channel/group counts do not agree"""


class ConfigurationError(LiftPoolError):
    """An option, spec string or hyperparameter is invalid"""


class UsageError(LiftPoolError):
    """An API or CLI was called in a way it does not support"""


class DataIOError(LiftPoolError):
    """An input file is missing or malformed, or an output cannot be written"""


class NumericalError(LiftPoolError):
    """A non-finite value appeared where a finite one is required"""


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


class ErrorHandler:
    """Turns exceptions into readable messages and exit codes"""

    ERROR_MESSAGES = {
        "UsageError": {
            "message": "❌ Invalid usage",
            "solutions": [
                "Check the subcommand and flag names: `python main.py --help`",
                "Each subcommand has its own help: `python main.py train --help`",
            ],
            "technical": "Command line or API misuse",
            "exit_code": EXIT_USAGE,
        },
        "ConfigurationError": {
            "message": "⚠️ Invalid configuration",
            "solutions": [
                "Pool specs are one of: max, avg, lp:<p>, mixed, stochastic, soft, tlp",
                "Check numeric ranges in config/config.yaml",
                "Remove unknown keys from config/config.yaml",
            ],
            "technical": "Option validation failed",
            "exit_code": EXIT_USAGE,
        },
        "ShapeError": {
            "message": "⚠️ Shape mismatch",
            "solutions": [
                "Signals are laid out as [batch, channel, time]",
                "A checkpoint must be used with the channel count it was trained on",
            ],
            "technical": "Tensor shapes do not agree",
            "exit_code": EXIT_USAGE,
        },
        "DataIOError": {
            "message": "📂 Could not read or write a file",
            "solutions": [
                "Check that the input path exists",
                "Signal CSV files need a header `channel,t0,t1,...`",
                "Check write permissions of the output directory",
            ],
            "technical": "File input/output failed",
            "exit_code": EXIT_IO,
        },
        "NumericalError": {
            "message": "🔢 Numerical failure",
            "solutions": [
                "Lower the learning rate (--lr)",
                "Check the input signal for NaN or Inf values",
                "Lower alpha_u / alpha_p",
            ],
            "technical": "Non-finite value or failed tolerance",
            "exit_code": EXIT_NUMERICAL,
        },
    }

    @staticmethod
    def get_error_message(error_type: str, context: Optional[Dict] = None) -> str:
        """Get user-friendly error message"""
        error_info = ErrorHandler.ERROR_MESSAGES.get(error_type, {
            "message": "❌ Unexpected error",
            "solutions": ["Re-run with --log-level DEBUG for the full traceback"],
            "technical": str(error_type),
        })

        message = error_info["message"]
        if context and context.get("detail"):
            message += f": {context['detail']}"

        if error_info.get("solutions"):
            message += "\n\nSuggestions:\n"
            for i, solution in enumerate(error_info["solutions"], 1):
                message += f"{i}. {solution}\n"

        if context and context.get("debug", False):
            message += f"\n(technical: {error_info['technical']})"

        return message

    @staticmethod
    def classify(e: BaseException) -> str:
        """Name of the catalog entry an exception belongs to"""
        for cls in type(e).__mro__:
            if cls.__name__ in ErrorHandler.ERROR_MESSAGES:
                return cls.__name__
        if isinstance(e, (FileNotFoundError, PermissionError, IsADirectoryError)):
            return "DataIOError"
        if isinstance(e, FloatingPointError):
            return "NumericalError"
        return type(e).__name__

    @staticmethod
    def exit_code(e: BaseException) -> int:
        """Process exit code for an exception (0 success, 1 usage, 2 I/O, 3 numerical)"""
        entry = ErrorHandler.ERROR_MESSAGES.get(ErrorHandler.classify(e))
        if entry is None:
            return EXIT_USAGE
        return entry["exit_code"]

    @staticmethod
    def handle_exception(e: BaseException, context: Optional[Dict] = None) -> str:
        """Handle exception and return user-friendly message"""
        error_type = ErrorHandler.classify(e)
        context = dict(context or {})
        context.setdefault("detail", str(e))

        if error_type in ErrorHandler.ERROR_MESSAGES:
            logger.error(f"{error_type}: {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
        else:
            logger.error(f"Error: {error_type} - {e}", exc_info=True)

        return ErrorHandler.get_error_message(error_type, context)
