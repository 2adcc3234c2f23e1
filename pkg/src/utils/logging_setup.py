import logging
import os
from datetime import datetime, timedelta
from pathlib import Path
from typing import List, Optional

import appdirs

from .custom_formatter import CustomFormatter

APP_NAME = "ceforge"
LOG_LEVEL_ENV = "CEFORGE_LOG_LEVEL"

_console_level: int = logging.WARNING


def _cleanup_old_logs(log_dir: Path, logger: logging.Logger) -> None:
    """
    Clean up log files that are older than 30 days if there are more than 10 log files.

    Args:
        log_dir: Path object pointing to the directory containing log files
        logger: Logger instance to use for logging cleanup operations
    """
    try:
        log_files: List[Path] = list(log_dir.glob(f'{APP_NAME}_*.log'))
        if len(log_files) <= 10:
            return

        cutoff_date: datetime = datetime.now() - timedelta(days=30)

        for log_file in log_files:
            try:
                # ceforge_YYYY-MM-DD.log
                date_str: str = log_file.stem.split('_')[-1]
                file_date: datetime = datetime.strptime(date_str, '%Y-%m-%d')
            except (ValueError, IndexError):
                file_date = datetime.fromtimestamp(log_file.stat().st_mtime)

            if file_date < cutoff_date:
                log_file.unlink()
                logger.debug(f"Deleted old log file: {log_file}")
    except Exception as e:
        logger.error(f"Error cleaning up old log files: {e}")


def _level_from_name(name: Optional[str], default: int) -> int:
    if not name:
        return default
    level = logging.getLevelName(name.strip().upper())
    return level if isinstance(level, int) else default


def get_log_dir() -> Path:
    return Path(appdirs.user_log_dir(APP_NAME))


def set_console_level(level_name: str) -> None:
    """Change the console level of every ceforge logger created so far and from now on."""
    global _console_level
    _console_level = _level_from_name(level_name, _console_level)
    for name, logger in logging.Logger.manager.loggerDict.items():
        if not name.startswith(f"{APP_NAME}.") or not isinstance(logger, logging.Logger):
            continue
        for handler in logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                handler.setLevel(_console_level)


def get_logger(module_name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module.

    Args:
        module_name: The name of the module requesting the logger

    Returns:
        A configured logger instance for the module
    """
    logger: logging.Logger = logging.getLogger(f"{APP_NAME}.{module_name}")
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    if logger.handlers:
        return logger

    # stderr only; stdout carries the reports
    ch: logging.StreamHandler = logging.StreamHandler()
    ch.setLevel(_level_from_name(os.getenv(LOG_LEVEL_ENV), _console_level))
    ch.setFormatter(CustomFormatter())
    logger.addHandler(ch)

    log_dir: Path = get_log_dir()
    try:
        log_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.warning(f"Log directory unavailable, logging to console only: {e}")
        return logger

    _cleanup_old_logs(log_dir, logger)

    date_str: str = datetime.now().strftime("%Y-%m-%d")
    log_file: Path = log_dir / f'{APP_NAME}_{date_str}.log'

    try:
        fh: logging.FileHandler = logging.FileHandler(log_file, mode='a', encoding='utf-8')
    except OSError as e:
        logger.warning(f"Could not open log file {log_file}: {e}")
        return logger
    fh.setLevel(logging.DEBUG)
    fh.setFormatter(CustomFormatter(use_colour=False))
    logger.addHandler(fh)

    return logger
