"""
graperun.core.replay
####################

This module serves HTTP exchanges recorded by :class:`ExchangeRecorder <graperun.core._record.ExchangeRecorder>`,
so backends can be exercised without a server.

.. autosummary::
    :toctree: generated/

    ReplayTransport
    load_fixture_file
"""

import threading
from base64 import b64decode
from json import loads
from os.path import exists

import httpx

from ..log import logger
from .error import FixtureError
from .type import ExchangeDict


def load_fixture_file(fixture_path: str) -> list[ExchangeDict]:
    """
    Read a fixture file.

    :param fixture_path: Fixture file path.
    :type fixture_path: str
    :return: Recorded exchanges.
    :rtype: list
    """
    if not exists(fixture_path):
        logger.error(f"Fixture file '{fixture_path}' not found.")
        raise FileNotFoundError(f"Fixture file '{fixture_path}' not found.")

    with open(fixture_path, "r") as f:
        return loads(f.read())


class ReplayTransport(httpx.BaseTransport):
    """
    Answer requests with recorded responses.

    A request is matched by method and path first; its body must then equal the recorded body byte by byte,
    otherwise :class:`FixtureError <graperun.core.error.FixtureError>` is raised.
    Exchanges sharing a method and path are served in recorded order.
    """

    def __init__(self, exchanges: list[ExchangeDict]):
        """
        :param exchanges: Recorded exchanges, see :func:`load_fixture_file`.
        :type exchanges: list
        """
        self._exchanges = list(exchanges)
        self._served = [False] * len(self._exchanges)
        self._lock = threading.Lock()

    @classmethod
    def from_fixture_file(cls, fixture_path: str) -> "ReplayTransport":
        """
        Create a transport from a fixture file.

        :param fixture_path: Fixture file path.
        :type fixture_path: str
        :return: New instance.
        :rtype: ReplayTransport
        """
        return cls(load_fixture_file(fixture_path))

    @property
    def served_count(self) -> int:
        """
        Number of exchanges served so far.
        """
        with self._lock:
            return sum(self._served)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        request_body = request.read()

        with self._lock:
            candidates = [
                index
                for index, _exchange in enumerate(self._exchanges)
                if _exchange["method"] == request.method and _exchange["path"] == request.url.path
            ]

            if len(candidates) == 0:
                logger.error(f"No recorded exchange for {request.method} {request.url.path}")
                raise FixtureError(f"No recorded exchange for {request.method} {request.url.path}")

            matches = [index for index in candidates if b64decode(self._exchanges[index]["request_body"]) == request_body]

            if len(matches) == 0:
                logger.error(f"Request body of {request.method} {request.url.path} differs from the recording.")
                raise FixtureError(f"Request body of {request.method} {request.url.path} differs from the recording.")

            # identical requests may be replayed more often than recorded
            unserved = [index for index in matches if not self._served[index]]
            index = unserved[0] if len(unserved) > 0 else matches[-1]

            self._served[index] = True
            exchange = self._exchanges[index]

        return httpx.Response(
            exchange["status_code"],
            headers={"content-type": exchange["content_type"]},
            content=b64decode(exchange["response_body"]),
            request=request,
        )


__all__ = ["ReplayTransport", "load_fixture_file"]
