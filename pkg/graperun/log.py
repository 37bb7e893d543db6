"""
graperun.log
############

.. autosummary::
    :toctree: generated/

    get_graperun_rich_console
    logger_add_file_handler
    set_logger
    correlation_context
    JsonLinesFormatter

``graperun`` submodule to manage logs.

Console output goes through ``rich``. Batch runs additionally write a structured log,
one JSON object per line, where every record carries the correlation id of the prompt
being processed, so logs of concurrent prompts can be told apart.
"""

import json
import logging
from contextlib import contextmanager
from contextvars import ContextVar
from datetime import datetime, timezone
from typing import Dict, List, Optional

from rich.console import Console
from rich.logging import RichHandler

from .utils import check_path

GRAPERUN_RICH_CONSOLE = Console(stderr=True)

_CORRELATION_ID: ContextVar[str] = ContextVar("graperun_correlation_id", default="-")


def set_logger(logger_list: List[str], logger_level: Optional[Dict] = None):
    """
    This function will replace all handlers of each logger in ``logger_list`` with RichHandler.

    If there are some custom handlers in logger, they will be replaced too.

    :param logger_list: A list contains loggers.
    :type logger_list: list
    :param logger_level: You can specify the log level in ``logger_level``, with the name of logger is the key,
                         and the level of logger is the value.
                         Default if None, with which all loggers' level will be set to ``logging.WARNING``.
    :type logger_level: dict | None
    """
    formatter = logging.Formatter("%(name)s :: %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
    handler = RichHandler(console=GRAPERUN_RICH_CONSOLE, markup=True)
    handler.setFormatter(formatter)

    for logger_name in logger_list:
        _logger = logging.getLogger(logger_name)
        for _handler in list(_logger.handlers):
            _logger.removeHandler(_handler)
        _logger.addHandler(handler)

        if logger_level is not None and logger_name in logger_level:
            _logger.setLevel(logger_level[logger_name])
        else:
            _logger.setLevel(logging.WARNING)


def unify_logger_format():
    """
    Route logs of the HTTP stack through the rich handler, quietly.
    """
    set_logger(["httpx", "httpcore"], {"httpx": logging.WARNING, "httpcore": logging.WARNING})


logger = logging.getLogger("graperun")
set_logger(["graperun"], {"graperun": logging.INFO})


class _CorrelationFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.correlation_id = _CORRELATION_ID.get()
        return True


class JsonLinesFormatter(logging.Formatter):
    """
    Format a record as a single JSON object.
    """

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "name": record.name,
            "correlation_id": getattr(record, "correlation_id", _CORRELATION_ID.get()),
            # rich markup is for the console only
            "message": record.getMessage().replace("[magenta]", "").replace("[/]", ""),
        }
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


@contextmanager
def correlation_context(correlation_id: str):
    """
    Tag every log record emitted inside the ``with`` block with ``correlation_id``.

    The id is stored in a ``ContextVar``, so each worker thread keeps its own value.

    >>> with correlation_context("prompt-0042"):
    ...     logger.info("planning")

    :param correlation_id: Usually the prompt id.
    :type correlation_id: str
    """
    token = _CORRELATION_ID.set(correlation_id)
    try:
        yield
    finally:
        _CORRELATION_ID.reset(token)


def get_correlation_id() -> str:
    """
    Get the correlation id of the current context.

    :return: Correlation id, ``"-"`` outside any :func:`correlation_context`.
    :rtype: str
    """
    return _CORRELATION_ID.get()


def logger_add_file_handler(log_path: str, file_name: str = "run.jsonl") -> logging.Handler:
    """
    Add a structured (JSON lines) file handler to the ``graperun`` logger.

    :param log_path: Log directory path.
    :type log_path: str
    :param file_name: Log file name.
    :type file_name: str
    :return: The handler, so callers can remove it when the run ends.
    :rtype: logging.Handler
    """
    check_path(log_path)

    file_handler = logging.FileHandler(f"{log_path}/{file_name}", encoding="utf-8")
    file_handler.setFormatter(JsonLinesFormatter())
    file_handler.addFilter(_CorrelationFilter())
    logger.addHandler(file_handler)
    return file_handler


def logger_remove_handler(handler: logging.Handler):
    """
    Detach and close a handler added by :func:`logger_add_file_handler`.

    :param handler: Handler.
    :type handler: logging.Handler
    """
    logger.removeHandler(handler)
    handler.close()


def get_graperun_rich_console() -> Console:
    """
    Get ``rich.console.Console`` instance used in graperun.

    :return: Console instance.
    :rtype: Console
    """
    return GRAPERUN_RICH_CONSOLE


__all__ = [
    "set_logger",
    "unify_logger_format",
    "logger_add_file_handler",
    "logger_remove_handler",
    "logger",
    "get_graperun_rich_console",
    "correlation_context",
    "get_correlation_id",
    "JsonLinesFormatter",
]
