"""
graperun.core._record
#####################

.. autosummary::
    :toctree: generated/

    ExchangeRecorder

ExchangeRecorder
****************

This class records HTTP exchanges between ``graperun`` and its backends.
It wraps any ``httpx`` transport, and every request/response pair passing through it is kept in memory
until :meth:`ExchangeRecorder.export_fixture_file` writes them to a JSON fixture.
The fixture can be served again with :class:`ReplayTransport <graperun.core.replay.ReplayTransport>`.

.. code-block:: Python

    recorder = ExchangeRecorder(httpx.HTTPTransport(), "fixtures/chat.json")
    backend = HTTPChatBackend(config, transport=recorder)
    backend.chat(request)
    recorder.export_fixture_file()
"""

import threading
from base64 import b64encode
from json import dumps
from os import makedirs
from os.path import dirname, exists

import httpx

from ..log import logger
from .type import ExchangeDict


class ExchangeRecorder(httpx.BaseTransport):
    """
    Record HTTP exchanges passing through a transport.
    """

    def __init__(self, transport: httpx.BaseTransport, save_path="./exchanges.json"):
        """
        :param transport: The transport which actually sends requests.
        :type transport: httpx.BaseTransport
        :param save_path: Save path of the fixture file, defaults to "./exchanges.json".
        :type save_path: str, optional
        """
        self._transport = transport
        self.save_path = save_path

        self._recorded_exchanges: list[ExchangeDict] = []
        self._lock = threading.Lock()

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        request_body = request.read()
        response = self._transport.handle_request(request)
        response_body = response.read()

        exchange: ExchangeDict = {
            "method": request.method,
            "path": request.url.path,
            "request_body": b64encode(request_body).decode("ascii"),
            "status_code": response.status_code,
            "content_type": response.headers.get("content-type", ""),
            "response_body": b64encode(response_body).decode("ascii"),
        }

        with self._lock:
            self._recorded_exchanges.append(exchange)

        return httpx.Response(
            response.status_code, headers={"content-type": exchange["content_type"]}, content=response_body, request=request
        )

    def close(self):
        self._transport.close()

    @property
    def recorded_exchanges(self) -> list[ExchangeDict]:
        """
        Exchanges recorded so far.

        :return: A copy of the list.
        :rtype: list
        """
        with self._lock:
            return list(self._recorded_exchanges)

    def clear_records(self):
        """
        Clean recorded exchanges.
        """
        with self._lock:
            self._recorded_exchanges = []

    def export_fixture_file(self):
        """
        Save recorded exchanges to the save path.
        """
        exchanges = self.recorded_exchanges

        if len(exchanges) == 0:
            logger.warning("No exchange has been recorded.")
            return

        if dirname(self.save_path) != "" and not exists(dirname(self.save_path)):
            makedirs(dirname(self.save_path))

        with open(self.save_path, "w") as f:
            f.write(dumps(exchanges, indent=4))

        logger.info(f"{len(exchanges)} exchanges exported to {self.save_path}")


__all__ = ["ExchangeRecorder"]
