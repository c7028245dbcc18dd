import os
from dataclasses import dataclass

from dotenv import load_dotenv

from .errors import ErrorCode, HeatflowError

# Load environment variables from .env file
load_dotenv()

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off", ""}


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults read from the environment (HEATFLOW_*)."""

    log_level: str = "INFO"
    threads: int = 1
    output_dir: str = "results"
    deterministic: bool = False

    @classmethod
    def from_env(cls) -> "Settings":
        log_level = os.getenv("HEATFLOW_LOG_LEVEL", "INFO").upper()
        if log_level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise HeatflowError(
                ErrorCode.CONFIG_ERROR,
                f"HEATFLOW_LOG_LEVEL={log_level!r} is not a logging level\n"
                "Use one of DEBUG, INFO, WARNING, ERROR, CRITICAL in your .env file.",
            )

        raw_threads = os.getenv("HEATFLOW_THREADS", "1")
        try:
            threads = int(raw_threads)
        except ValueError:
            threads = 0
        if threads < 1:
            raise HeatflowError(
                ErrorCode.CONFIG_ERROR,
                f"HEATFLOW_THREADS={raw_threads!r} must be a positive integer",
            )

        raw_det = os.getenv("HEATFLOW_DETERMINISTIC", "false").strip().lower()
        if raw_det not in _TRUTHY | _FALSY:
            raise HeatflowError(
                ErrorCode.CONFIG_ERROR,
                f"HEATFLOW_DETERMINISTIC={raw_det!r} must be true or false",
            )

        return cls(
            log_level=log_level,
            threads=threads,
            output_dir=os.getenv("HEATFLOW_OUTPUT_DIR", "results"),
            deterministic=raw_det in _TRUTHY,
        )
