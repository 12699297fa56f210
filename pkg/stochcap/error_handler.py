"""
Error Handler - Error taxonomy and classification for the capacity toolkit.

Every failure raised by the toolkit is a CapacityError carrying an ErrorType.
The ErrorClassifier turns any exception into a short user-facing message and
the process exit status used by the command line:

1. Input errors (schema, malformed rows, bad arguments, provenance) -> exit 1
2. I/O errors (unreadable or unwritable files)                      -> exit 1
3. Estimation errors (degenerate data, non-convergence)             -> exit 2
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional
import logging


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ESTIMATION = 2


class ErrorType(str, Enum):
    """Enumeration of all error types"""
    SCHEMA = "schema"
    MALFORMED_INPUT = "malformed_input"
    INVALID_ARGUMENT = "invalid_argument"
    PROVENANCE_MISMATCH = "provenance_mismatch"

    IO = "io"

    DEGENERATE_DATA = "degenerate_data"
    NON_CONVERGENCE = "non_convergence"

    INTERNAL = "internal"


class ErrorSeverity(str, Enum):
    """Error severity levels"""
    LOW = "low"  # Reported, processing continued
    MEDIUM = "medium"  # Fix the input and rerun
    HIGH = "high"  # Result cannot be produced


class CapacityError(Exception):
    """Base class for all toolkit errors"""

    error_type: ErrorType = ErrorType.INTERNAL

    def __init__(self, message: str, *, error_type: Optional[ErrorType] = None):
        super().__init__(message)
        if error_type is not None:
            self.error_type = error_type


class InputError(CapacityError):
    """Input data or arguments cannot be used"""
    error_type = ErrorType.MALFORMED_INPUT


class SchemaError(InputError):
    """CSV/JSON layout does not match the expected schema"""
    error_type = ErrorType.SCHEMA

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class ArgumentError(InputError, ValueError):
    """An operation precondition was violated"""
    error_type = ErrorType.INVALID_ARGUMENT


class ProvenanceError(ArgumentError):
    """Parameters used with intensities from a different aggregation window"""
    error_type = ErrorType.PROVENANCE_MISMATCH


class EstimationError(CapacityError):
    """The likelihood could not be maximized"""
    error_type = ErrorType.NON_CONVERGENCE

    def __init__(
        self,
        message: str,
        *,
        error_type: Optional[ErrorType] = None,
        best_params: Any = None,
        diagnostics: Any = None,
    ):
        super().__init__(message, error_type=error_type)
        self.best_params = best_params
        self.diagnostics = diagnostics


@dataclass
class ErrorClassification:
    """Classification result for an error"""
    error_type: ErrorType
    severity: ErrorSeverity
    user_message: str
    system_message: str
    exit_code: int
    details: dict = field(default_factory=dict)


class ErrorClassifier:
    """Maps exceptions to classifications and exit statuses"""

    USER_MESSAGES = {
        ErrorType.SCHEMA: "Input file does not match the expected columns",
        ErrorType.MALFORMED_INPUT: "Input data could not be used",
        ErrorType.INVALID_ARGUMENT: "Invalid argument",
        ErrorType.PROVENANCE_MISMATCH: "Parameters were fitted with a different aggregation window",
        ErrorType.IO: "File could not be read or written",
        ErrorType.DEGENERATE_DATA: "Data cannot identify a capacity distribution",
        ErrorType.NON_CONVERGENCE: "Likelihood maximization did not converge",
        ErrorType.INTERNAL: "Unexpected failure",
    }

    @staticmethod
    def classify(exc: BaseException) -> ErrorClassification:
        """Classify any exception raised while running a command."""
        if isinstance(exc, EstimationError):
            details = {}
            if exc.best_params is not None:
                details["best_params"] = exc.best_params
            return ErrorClassification(
                error_type=exc.error_type,
                severity=ErrorSeverity.HIGH,
                user_message=ErrorClassifier.USER_MESSAGES[exc.error_type],
                system_message=str(exc),
                exit_code=EXIT_ESTIMATION,
                details=details,
            )

        if isinstance(exc, SchemaError):
            details = {"column": exc.column} if exc.column else {}
            return ErrorClassification(
                error_type=ErrorType.SCHEMA,
                severity=ErrorSeverity.MEDIUM,
                user_message=ErrorClassifier.USER_MESSAGES[ErrorType.SCHEMA],
                system_message=str(exc),
                exit_code=EXIT_INPUT,
                details=details,
            )

        if isinstance(exc, CapacityError):
            return ErrorClassification(
                error_type=exc.error_type,
                severity=ErrorSeverity.MEDIUM,
                user_message=ErrorClassifier.USER_MESSAGES[exc.error_type],
                system_message=str(exc),
                exit_code=EXIT_INPUT if isinstance(exc, InputError) else EXIT_ESTIMATION,
            )

        if isinstance(exc, OSError):
            return ErrorClassification(
                error_type=ErrorType.IO,
                severity=ErrorSeverity.HIGH,
                user_message=ErrorClassifier.USER_MESSAGES[ErrorType.IO],
                system_message=f"{type(exc).__name__}: {exc}",
                exit_code=EXIT_INPUT,
            )

        if isinstance(exc, ValueError):
            return ErrorClassification(
                error_type=ErrorType.INVALID_ARGUMENT,
                severity=ErrorSeverity.MEDIUM,
                user_message=ErrorClassifier.USER_MESSAGES[ErrorType.INVALID_ARGUMENT],
                system_message=str(exc),
                exit_code=EXIT_INPUT,
            )

        logger.error(f"[UNCLASSIFIED] {type(exc).__name__}: {exc}")
        return ErrorClassification(
            error_type=ErrorType.INTERNAL,
            severity=ErrorSeverity.HIGH,
            user_message=ErrorClassifier.USER_MESSAGES[ErrorType.INTERNAL],
            system_message=f"{type(exc).__name__}: {exc}",
            exit_code=EXIT_INPUT,
        )
