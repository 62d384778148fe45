"""Structured logging configuration for Latent Force MPC."""

import json
import logging
import logging.handlers
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging.

    Structured payloads are passed with ``extra={"fields": {...}}`` and merged
    into the emitted object under the ``fields`` key.
    """

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        fields = getattr(record, "fields", None)
        if fields:
            log_data["fields"] = fields
        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_data, default=_json_default)


class TextFormatter(logging.Formatter):
    """Human-readable formatter that appends structured fields as key=value pairs."""

    def __init__(self) -> None:
        super().__init__(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        fields = getattr(record, "fields", None)
        if fields:
            line += " | " + " ".join(f"{k}={_json_default(v)}" for k, v in fields.items())
        return line


def _json_default(value):
    # numpy scalars and arrays reach the formatter through step records
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


def setup_logging(
    name: str = "latent_force_mpc",
    level: str = "INFO",
    log_dir: Optional[str] = None,
    format_type: str = "json",
) -> logging.Logger:
    """Setup logger with console and optional rotating file handlers.

    Args:
        name: Logger name (the package root configures every module logger)
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for log files (optional)
        format_type: Format type - 'json' or 'text'

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper()))
    logger.propagate = False

    # Clear existing handlers
    logger.handlers = []

    formatter: logging.Formatter = JSONFormatter() if format_type == "json" else TextFormatter()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, level.upper()))
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_dir:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)

        log_file = log_path / f"{name}_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.handlers.RotatingFileHandler(
            log_file, maxBytes=10 * 1024 * 1024, backupCount=5
        )
        file_handler.setLevel(getattr(logging, level.upper()))
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def get_logger(name: str = "latent_force_mpc") -> logging.Logger:
    """Get or create logger configured from the environment.

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    log_level = os.getenv("LFMPC_LOG_LEVEL", "INFO")
    log_dir = os.getenv("LFMPC_LOG_DIR")
    format_type = os.getenv("LFMPC_LOG_FORMAT", "json")

    return setup_logging(name, log_level, log_dir, format_type)
