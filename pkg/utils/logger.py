"""
Logger Utility
Console/file logging setup and performance timing for simulation runs
"""

import logging
import time
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional

DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DEFAULT_DATEFMT = '%Y-%m-%d %H:%M:%S'


class LogLevel(str, Enum):
    """Log levels"""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


def setup_logging(level: str = LogLevel.INFO.value, log_file: Optional[str] = None,
                  fmt: str = DEFAULT_FORMAT) -> logging.Logger:
    """Attach console (stderr) and optional file handlers to the root logger.

    Calling it again replaces the handlers installed by the previous call.
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_squintloc', False):
            root.removeHandler(handler)
            handler.close()

    root.setLevel(logging.DEBUG)
    formatter = logging.Formatter(fmt, datefmt=DEFAULT_DATEFMT)

    # Console handler
    ch = logging.StreamHandler()
    ch.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    ch.setFormatter(formatter)
    ch._squintloc = True
    root.addHandler(ch)

    # File handler
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(path)
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(formatter)
        fh._squintloc = True
        root.addHandler(fh)

    return logging.getLogger("squintloc")


def log_performance(logger: logging.Logger, operation: str, duration_ms: float,
                    status: str = "success") -> None:
    logger.debug(f"Performance: {operation} - {duration_ms:.1f}ms ({status})")


@contextmanager
def timed(operation: str, logger: Optional[logging.Logger] = None) -> Iterator[dict]:
    """Time a block; the yielded dict receives 'duration_ms' on exit"""
    logger = logger or logging.getLogger("squintloc")
    result = {}
    start = time.perf_counter()
    status = "success"
    try:
        yield result
    except Exception:
        status = "error"
        raise
    finally:
        result['duration_ms'] = (time.perf_counter() - start) * 1000.0
        log_performance(logger, operation, result['duration_ms'], status)
