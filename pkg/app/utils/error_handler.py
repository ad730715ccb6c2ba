"""
Error handling utilities for sftkit
Domain exceptions, error codes and structured error payloads for the CLI
"""

import uuid
import logging
import traceback
from typing import Optional, Dict, Any
from datetime import datetime

logger = logging.getLogger(__name__)


class SftkitError(Exception):
    """Base exception for every domain error raised by the toolkit"""

    error_code = "SFTKIT_ERROR"

    def __init__(self, message: str, error_code: Optional[str] = None, original_error: Optional[Exception] = None,
                 details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.error_code = error_code or self.error_code
        self.original_error = original_error
        self.details = details or {}
        super().__init__(self.message)


class DefinitionError(SftkitError):
    """Malformed SFT definition or pattern file"""
    error_code = "DEFINITION_ERROR"


class UnknownSymbol(SftkitError):
    """A pattern cell carries a symbol outside the alphabet"""
    error_code = "UNKNOWN_SYMBOL"


class WidthTooSmall(SftkitError):
    error_code = "WIDTH_TOO_SMALL"


class OrderTooLarge(SftkitError):
    error_code = "ORDER_TOO_LARGE"


class NotAdmissible(SftkitError):
    """Input pattern violates the local rules required by the operation"""
    error_code = "NOT_ADMISSIBLE"


class Inadmissible(SftkitError):
    """A block handed to a gluing computation fails check_pattern"""
    error_code = "INADMISSIBLE"


class CompletionFailed(SftkitError):
    error_code = "COMPLETION_FAILED"


class ThresholdUnmet(SftkitError):
    error_code = "THRESHOLD_UNMET"


class NoWitness(SftkitError):
    error_code = "NO_WITNESS"


class WitnessUnavailable(SftkitError):
    error_code = "WITNESS_UNAVAILABLE"


class KExhausted(SftkitError):
    error_code = "K_EXHAUSTED"


class BoundTooLarge(SftkitError):
    error_code = "BOUND_TOO_LARGE"


class RZero(SftkitError):
    error_code = "R_ZERO"


class ErrorHandler:
    """Centralized mapping from exceptions to codes, payloads and exit codes"""

    @staticmethod
    def create_error_payload(error: Exception, include_details: bool = False) -> Dict[str, Any]:
        """Create a standardized error payload"""
        error_id = str(uuid.uuid4())
        payload = {
            "error": {
                "code": ErrorHandler._get_error_code(error),
                "message": ErrorHandler._get_message(error),
                "error_id": error_id,
                "timestamp": datetime.utcnow().isoformat(),
            }
        }
        if isinstance(error, SftkitError) and error.details:
            payload["error"]["details"] = error.details
        if include_details:
            payload["error"]["trace"] = {
                "error_type": type(error).__name__,
                "original_error": str(getattr(error, "original_error", None) or error),
                "stack_trace": traceback.format_exc(),
            }

        ErrorHandler._log_error(error_id, error)
        return payload

    @staticmethod
    def exit_code(error: Exception) -> int:
        """Exit status for the command line: 1 for runtime errors"""
        return 1

    @staticmethod
    def _get_error_code(error: Exception) -> str:
        """Generate appropriate error codes based on exception type"""
        if isinstance(error, SftkitError):
            return error.error_code
        elif isinstance(error, ValueError):
            return "VALIDATION_ERROR"
        elif isinstance(error, FileNotFoundError):
            return "FILE_NOT_FOUND"
        elif isinstance(error, PermissionError):
            return "PERMISSION_DENIED"
        else:
            return "INTERNAL_ERROR"

    @staticmethod
    def _get_message(error: Exception) -> str:
        if isinstance(error, SftkitError):
            return error.message
        elif isinstance(error, FileNotFoundError):
            return f"File not found: {error.filename}"
        elif isinstance(error, ValueError):
            return f"Invalid input: {error}"
        return "An unexpected error occurred."

    @staticmethod
    def _log_error(error_id: str, error: Exception):
        """Log error with structured context"""
        logger.error(
            f"Error {error_id}: {type(error).__name__}",
            extra={
                "error_id": error_id,
                "error_type": type(error).__name__,
                "error_code": ErrorHandler._get_error_code(error),
                "error_message": str(error),
            },
        )
