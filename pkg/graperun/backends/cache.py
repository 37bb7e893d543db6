"""
graperun.backends.cache
#######################

.. autosummary::
    :toctree: generated/

    ResponseCache
    cache_key

On-disk cache of backend responses, keyed by the content id of the request.

.. code-block:: text

    cache/
    ├── 3f/
    │   ├── 3f9a...e1              raw response bytes
    │   └── 3f9a...e1.meta.json    status, content type, endpoint, model
    └── ...

Requests are sent with temperature 0 and a fixed seed, so a repeated request can be answered from the cache.
"""

import threading
from contextlib import contextmanager
from json import dumps, loads
from os import replace
from os.path import exists
from tempfile import NamedTemporaryFile
from typing import Iterator, Optional

from ..log import logger
from ..model import content_id
from ..utils import check_path


def cache_key(path: str, body: bytes) -> str:
    """
    Cache key of a request.

    :param path: Endpoint path, for example ``/v1/chat/completions``.
    :type path: str
    :param body: Serialized request body.
    :type body: bytes
    :return: Content id.
    :rtype: str
    """
    return content_id(path.encode("utf-8") + b"\n" + body)


class ResponseCache:
    """
    Store response bytes with a metadata sidecar. Safe to share between threads.
    Concurrent requests with the same key are sent once, see :meth:`claim`.
    """

    def __init__(self, root: str):
        """
        :param root: Cache directory.
        :type root: str
        """
        self.root = root
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self._claims: dict[str, int] = {}
        check_path(root)

    def _path(self, key: str) -> str:
        return f"{self.root}/{key[:2]}/{key}"

    def get(self, key: str) -> Optional[tuple[bytes, dict]]:
        """
        Look up a response.

        :param key: Cache key.
        :type key: str
        :return: ``(body, metadata)`` or ``None``.
        :rtype: tuple | None
        """
        path = self._path(key)
        with self._lock:
            if not (exists(path) and exists(f"{path}.meta.json")):
                return None

            with open(path, "rb") as f:
                body = f.read()
            with open(f"{path}.meta.json", "r") as f:
                meta = loads(f.read())

        logger.debug(f"Cache hit {key[:12]}")
        return body, meta

    def put(self, key: str, body: bytes, meta: dict):
        """
        Store a response. The metadata sidecar is written last, so a half-written entry is never read.

        :param key: Cache key.
        :type key: str
        :param body: Response bytes.
        :type body: bytes
        :param meta: JSON-serializable metadata.
        :type meta: dict
        """
        path = self._path(key)
        with self._lock:
            check_path(f"{self.root}/{key[:2]}")
            for _target, _content in ((path, body), (f"{path}.meta.json", dumps(meta, sort_keys=True).encode("utf-8"))):
                with NamedTemporaryFile("wb", dir=f"{self.root}/{key[:2]}", delete=False) as f:
                    f.write(_content)
                    temp_path = f.name
                replace(temp_path, _target)

    @contextmanager
    def claim(self, key: str) -> Iterator[None]:
        """
        Hold a key while a response for it is looked up and fetched.
        Other threads claiming the same key wait, then find the stored response.

        :param key: Cache key.
        :type key: str
        """
        with self._lock:
            key_lock = self._key_locks.setdefault(key, threading.Lock())
            self._claims[key] = self._claims.get(key, 0) + 1

        try:
            with key_lock:
                yield

        finally:
            with self._lock:
                self._claims[key] -= 1
                if self._claims[key] == 0:
                    del self._claims[key]
                    del self._key_locks[key]

    def __contains__(self, key: str) -> bool:
        return exists(f"{self._path(key)}.meta.json")


__all__ = ["ResponseCache", "cache_key"]
