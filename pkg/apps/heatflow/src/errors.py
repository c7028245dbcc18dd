"""Error type shared by the library, the CLI and the MCP tools."""

from enum import Enum
from typing import Any, Dict


class ErrorCode(str, Enum):
    DEGENERATE_PENCIL = "DEGENERATE_PENCIL"
    UNDAMPED_MODE = "UNDAMPED_MODE"
    POLE_EVALUATION = "POLE_EVALUATION"
    UNSTABLE_NETWORK = "UNSTABLE_NETWORK"
    DEGENERATE_SPECTRUM = "DEGENERATE_SPECTRUM"
    DIGAMMA_POLE = "DIGAMMA_POLE"
    NUMERICAL_DEGENERACY = "NUMERICAL_DEGENERACY"
    CONTACT_OVERLAP = "CONTACT_OVERLAP"
    DIVERGENT_ARGUMENT = "DIVERGENT_ARGUMENT"
    NOT_SYMMETRIC = "NOT_SYMMETRIC"
    QUADRATURE_FAILURE = "QUADRATURE_FAILURE"
    FIT_DOMAIN = "FIT_DOMAIN"
    INVALID_INPUT = "INVALID_INPUT"
    CONFIG_ERROR = "CONFIG_ERROR"
    VERIFICATION_FAILED = "VERIFICATION_FAILED"


class HeatflowError(Exception):
    """Raised for every library failure; ``code`` is machine readable.

    Extra keyword arguments are kept in ``details`` and travel with the error
    into CLI output and tool responses.
    """

    def __init__(self, code: ErrorCode, message: str, **details: Any):
        self.code = ErrorCode(code)
        self.message = message
        self.details = details
        super().__init__(f"[{self.code.value}] {message}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code.value,
            "message": self.message,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return [value.real, value.imag]
    try:
        return float(value)
    except (TypeError, ValueError):
        return repr(value)
