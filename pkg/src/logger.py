import logging
import sys
import io
from pathlib import Path
from logging.handlers import RotatingFileHandler
from typing import Optional

from src.config import Config as settings

# Configure UTF-8 encoding for stderr on Windows BEFORE any logging setup
if sys.platform == 'win32' and hasattr(sys.stderr, 'buffer'):
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8', errors='replace', line_buffering=True)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


# Custom formatter with colors for console
class ColoredFormatter(logging.Formatter):
    """Custom formatter with colors for different log levels"""

    COLORS = {
        'DEBUG': '\033[36m',    # Cyan
        'INFO': '\033[32m',     # Green
        'WARNING': '\033[33m',  # Yellow
        'ERROR': '\033[31m',    # Red
        'CRITICAL': '\033[35m', # Magenta
    }
    RESET = '\033[0m'

    def format(self, record):
        original = record.levelname
        if original in self.COLORS:
            record.levelname = f"{self.COLORS[original]}{original}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def _file_handlers(log_file: str) -> list[logging.Handler]:
    path = Path(log_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    # File handler for all logs (with UTF-8 encoding)
    file_handler = RotatingFileHandler(
        path,
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)

    # Error file handler for errors only
    error_handler = logging.FileHandler(path.with_name(f"{path.stem}.error.log"), encoding='utf-8')
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)
    return [file_handler, error_handler]


def setup_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """Module logger: coloured console on stderr, optional rotating file when LOG_FILE is set.

    Reports go to stdout, so the console handler stays on stderr.
    """
    logger = logging.getLogger(name)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.WARNING)
    logger.setLevel(log_level)
    logger.propagate = False

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(ColoredFormatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)

    if settings.LOG_FILE:
        for handler in _file_handlers(settings.LOG_FILE):
            logger.addHandler(handler)

    return logger


def set_level(level: str) -> None:
    """Re-level every logger created through setup_logger (used by the --log-level flag)."""
    log_level = getattr(logging, level.upper(), logging.WARNING)
    for name, existing in logging.Logger.manager.loggerDict.items():
        if isinstance(existing, logging.Logger) and name.startswith(("src", "__main__")):
            existing.setLevel(log_level)
            for handler in existing.handlers:
                if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                    handler.setLevel(log_level)


__all__ = ["setup_logger", "set_level", "ColoredFormatter"]
