import logging
import os

import colorlog

from ... import config

_FORMAT = "[%(asctime)s] %(filename)s/%(funcName)s - %(levelname)s - %(message)s"
_COLOR_FORMAT = (
    "[%(asctime)s] %(filename)s/%(funcName)s - "
    "%(log_color)s%(levelname)s%(reset)s - %(message)s"
)
_DATE_FORMAT = "%y-%m-%d %H:%M:%S"


def _console_formatter() -> logging.Formatter:
    return colorlog.ColoredFormatter(
        _COLOR_FORMAT,
        datefmt=_DATE_FORMAT,
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "bold_red",
        },
    )


def setup_logger(
    name: str = config.PROJECT, log_file: str = None, level: int = logging.INFO
) -> logging.Logger:
    """
    Set up and return a logger with a colored console handler and an optional file handler.

    Args:
        name (str): Name of the logger.
        log_file (str): Path to the log file. If None, only console logging is used.
        level (int): Logging level (e.g., logging.DEBUG, logging.INFO).

    Returns:
        logging.Logger: Configured logger instance.
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Prevent adding multiple handlers to the logger if it's already configured.
    if logger.handlers:
        return logger

    ch = logging.StreamHandler()
    ch.setLevel(level)
    ch.setFormatter(_console_formatter())
    logger.addHandler(ch)

    # File handler (if a log file is specified), without color codes.
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        fh = logging.FileHandler(log_file)
        fh.setLevel(level)
        fh.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATE_FORMAT))
        logger.addHandler(fh)

    return logger


def set_level(level: int) -> None:
    """
    Change the level of the application logger and all of its handlers.
    """
    app_logger.setLevel(level)
    for handler in app_logger.handlers:
        handler.setLevel(level)


# Create the default logger instance for the project.
app_logger = setup_logger(
    log_file=config.LOG_FILE, level=getattr(logging, config.LOG_LEVEL, logging.INFO)
)

# cspell: ignore levelname
