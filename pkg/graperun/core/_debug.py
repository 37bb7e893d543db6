"""
graperun.core._debug
####################

.. autosummary::
    :toctree: generated/

    DebugMixIn

DebugMixIn
**********

This class provides methods and attributes to debug ``graperun`` itself.

Attribute
=========

* ``DEBUG_MODE``: ``bool`` attribute, basic switch for all other options. Defaults to ``False``.
* ``DEBUG_MODE_LOGGER``: ``bool | None`` attribute, switch for logging logger. If ``None``, use ``DEBUG_MODE`` value.
* ``DEBUG_MODE_HTTP``: ``bool | None`` attribute, switch for logs of the HTTP stack. If ``None``, use ``DEBUG_MODE`` value.

Environmental parameters
========================

* ``GRAPERUN_DEBUG_MODE``: For ``DEBUG_MODE``, ``1`` or ``0``.
* ``GRAPERUN_DEBUG_MODE_LOGGER``: For ``DEBUG_MODE_LOGGER``, ``1`` or ``0``.
* ``GRAPERUN_DEBUG_MODE_HTTP``: For ``DEBUG_MODE_HTTP``, ``1`` or ``0``.
"""

import logging
from os import environ
from typing import Optional

from ..log import logger


def _read_switch(name: str) -> Optional[bool]:
    if name not in environ:
        return None

    return environ[name].strip().lower() in ("1", "true", "yes", "on")


class DebugMixIn:
    """
    Provide methods and attributes to debug ``graperun`` itself.
    """

    _environ_params = [
        "GRAPERUN_DEBUG_MODE",
        "GRAPERUN_DEBUG_MODE_LOGGER",
        "GRAPERUN_DEBUG_MODE_HTTP",
    ]

    def __init__(self, *args, **kwargs):
        """
        Provide methods and attributes to debug ``graperun`` itself.
        """
        self._debug_mode: bool = bool(_read_switch("GRAPERUN_DEBUG_MODE"))
        self._debug_mode_logger: Optional[bool] = _read_switch("GRAPERUN_DEBUG_MODE_LOGGER")
        self._debug_mode_http: Optional[bool] = _read_switch("GRAPERUN_DEBUG_MODE_HTTP")

        self._change_log_level()

        super().__init__(*args, **kwargs)

    @property
    def DEBUG_MODE(self) -> bool:
        """
        Base switch for all debug options.

        :return: If in debug mode.
        :rtype: bool
        """
        return self._debug_mode

    @DEBUG_MODE.setter
    def DEBUG_MODE(self, value: bool):
        self._debug_mode = value
        self._change_log_level()

    @property
    def DEBUG_MODE_LOGGER(self) -> bool:
        """
        Debug switch for logger.

        :return: If is in debug mode.
        :rtype: bool
        """
        if self._debug_mode_logger is None:
            return self._debug_mode
        else:
            return self._debug_mode_logger

    @DEBUG_MODE_LOGGER.setter
    def DEBUG_MODE_LOGGER(self, value: Optional[bool]):
        self._debug_mode_logger = value
        self._change_log_level()

    @property
    def DEBUG_MODE_HTTP(self) -> bool:
        """
        Debug switch for ``httpx`` logs.

        :return: If is in debug mode.
        :rtype: bool
        """
        if self._debug_mode_http is None:
            return self._debug_mode
        else:
            return self._debug_mode_http

    @DEBUG_MODE_HTTP.setter
    def DEBUG_MODE_HTTP(self, value: Optional[bool]):
        self._debug_mode_http = value
        self._change_log_level()

    def _change_log_level(self):
        """
        Change logging level when a debug switch is changed.
        """
        if self.DEBUG_MODE_LOGGER:
            logger.setLevel(logging.DEBUG)
            logger.debug("Logger debug mode is on.")

        else:
            logger.setLevel(logging.INFO)

        http_level = logging.DEBUG if self.DEBUG_MODE_HTTP else logging.WARNING
        for _name in ("httpx", "httpcore"):
            logging.getLogger(_name).setLevel(http_level)


__all__ = ["DebugMixIn"]
