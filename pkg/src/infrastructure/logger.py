"""
Logger configuration for UniDA3D

Provides structured logging with a console handler and an optional per-run
file handler writing run.log into the run directory.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Optional, Union
from config import config


class Logger:
    """
    Centralized logger for the engine.

    Usage:
        from src.infrastructure.logger import get_logger

        logger = get_logger(__name__)
        logger.info("Source training started")
    """

    _loggers: dict = {}
    _initialized: bool = False
    _file_handler: Optional[logging.Handler] = None

    @classmethod
    def setup(cls, log_level: Optional[str] = None) -> None:
        """
        Setup the logging configuration.

        Args:
            log_level: Logging level (default: from config)
        """
        if cls._initialized:
            return

        log_level = log_level or config.LOG_LEVEL

        # Create logger
        root_logger = logging.getLogger()
        root_logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))

        # Remove existing handlers
        root_logger.handlers.clear()

        simple_formatter = logging.Formatter(
            fmt="%(levelname)s: %(message)s"
        )

        # Console handler (stderr keeps stdout free for command output)
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.INFO)
        console_handler.setFormatter(simple_formatter)
        root_logger.addHandler(console_handler)

        cls._initialized = True

    @classmethod
    def set_level(cls, log_level: str) -> None:
        """Change the root and console level of an already configured logger"""
        cls.setup()
        level = getattr(logging, log_level.upper(), logging.INFO)
        root_logger = logging.getLogger()
        root_logger.setLevel(level)
        for handler in root_logger.handlers:
            if handler is not cls._file_handler:
                handler.setLevel(level)

    @classmethod
    def attach_run_file(cls, run_dir: Union[str, Path], log_level: Optional[str] = None) -> Path:
        """
        Mirror all records into <run_dir>/run.log with the detailed format.

        Replaces a previously attached run file.

        Returns:
            Path of the log file
        """
        cls.setup()
        cls.detach_run_file()
        log_path = Path(run_dir) / config.LOG_FILE
        log_path.parent.mkdir(parents=True, exist_ok=True)

        detailed_formatter = logging.Formatter(
            fmt=config.LOG_FORMAT,
            datefmt="%Y-%m-%d %H:%M:%S"
        )
        file_handler = logging.FileHandler(log_path, mode="a", encoding="utf-8")
        file_handler.setLevel(getattr(logging, (log_level or config.LOG_LEVEL).upper(), logging.INFO))
        file_handler.setFormatter(detailed_formatter)
        logging.getLogger().addHandler(file_handler)
        cls._file_handler = file_handler

        root_logger = logging.getLogger()
        root_logger.info("=" * 50)
        root_logger.info(f"{config.APP_NAME} v{config.VERSION} - run log at {log_path}")
        root_logger.info("=" * 50)
        return log_path

    @classmethod
    def detach_run_file(cls) -> None:
        if cls._file_handler is not None:
            logging.getLogger().removeHandler(cls._file_handler)
            cls._file_handler.close()
            cls._file_handler = None

    @classmethod
    def get_logger(cls, name: str) -> logging.Logger:
        """
        Get a logger instance with the given name.

        Args:
            name: Logger name (typically __name__ of the module)

        Returns:
            Logger instance
        """
        if not cls._initialized:
            cls.setup()

        if name not in cls._loggers:
            cls._loggers[name] = logging.getLogger(name)

        return cls._loggers[name]


def get_logger(name: str) -> logging.Logger:
    """
    Convenience function to get a logger.

    Args:
        name: Logger name (typically __name__ of the module)

    Returns:
        Logger instance
    """
    return Logger.get_logger(name)


def log_exception(logger: Optional[logging.Logger] = None):
    """
    Decorator to log exceptions raised by functions.

    Usage:
        @log_exception(logger)
        def train_source(...):
            ...
    """
    def decorator(func):
        nonlocal_logger = logger or get_logger(func.__module__)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            func_name = func.__name__
            try:
                return func(*args, **kwargs)
            except Exception as e:
                nonlocal_logger.error(
                    f"Exception in {func_name}: {type(e).__name__}: {e}",
                    exc_info=True
                )
                raise

        return wrapper
    return decorator
