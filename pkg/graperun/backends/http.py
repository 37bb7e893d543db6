"""
graperun.backends.http
######################

.. autosummary::
    :toctree: generated/

    HTTPBackendBase
    HTTPChatBackend
    HTTPGeneratorBackend
    HTTPEditorBackend

Backends talking to HTTP servers.

Wire format
***********

``POST /v1/chat/completions``
    OpenAI-compatible chat completions. Images are sent as ``image_url`` parts holding ``data:`` URLs.

``POST /v1/generate``
    Request ``{"model": str, "prompt": str, "seed": int}``, the response body is the image.

``POST /v1/edit``
    Request ``{"model": str, "image": {"media_type": str, "data": base64}, "instruction": str, "seed": int}``,
    the response body is the edited image. Status 422 means the instruction can't be applied.

Request bodies are canonical JSON (sorted keys, no whitespace), so identical requests have identical bytes.
They are cached by :class:`ResponseCache <graperun.backends.cache.ResponseCache>` when enabled.

Transport errors, 429 and 5xx responses are retried at most ``max_retries`` times with bounded random exponential
backoff. Other non-2xx responses fail immediately.
"""

import threading
from base64 import b64encode
from json import JSONDecodeError, loads
from os import environ
from typing import Optional

import httpx
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_random_exponential

from ..core import BackendError, BackendStatusError, InstructionRejectedError
from ..log import logger
from ..model import SCENE_MEDIA_TYPE, ArtifactStore, EditInstruction, ImageKind, ImageRef, Producer
from ..utils import dump_canonical_json
from .base import ChatRequest, ChatResponse, ChatVisionBackend, EditorBackend, GeneratorBackend
from .cache import ResponseCache, cache_key
from .config import BackendConfig

CHAT_PATH = "/v1/chat/completions"
GENERATE_PATH = "/v1/generate"
EDIT_PATH = "/v1/edit"


class _RetryableStatus(Exception):
    def __init__(self, response: httpx.Response):
        super().__init__(f"status {response.status_code}")
        self.response = response


def _excerpt(response: httpx.Response, limit: int = 200) -> str:
    return response.content[:limit].decode("utf-8", errors="replace")


class HTTPBackendBase:
    """
    Shared HTTP plumbing: client, in-flight cap, retries and response cache.
    """

    def __init__(
        self, config: BackendConfig, cache: Optional[ResponseCache] = None, transport: Optional[httpx.BaseTransport] = None
    ):
        """
        :param config: Backend config.
        :type config: BackendConfig
        :param cache: Response cache, only used if ``config.cache`` is true.
        :type cache: ResponseCache | None
        :param transport: ``httpx`` transport, for tests and record/replay.
        :type transport: httpx.BaseTransport | None
        """
        self.config = config
        self.cache = cache if config.cache else None

        headers = {}
        if config.api_key_env_var != "":
            api_key = environ.get(config.api_key_env_var)
            if api_key is None:
                logger.warning(f"Environment variable '{config.api_key_env_var}' of backend '{config.role}' isn't set.")
            else:
                headers["Authorization"] = f"Bearer {api_key}"

        self._client = httpx.Client(
            base_url=config.endpoint_url, timeout=config.timeout_seconds, headers=headers, transport=transport
        )
        self._in_flight = threading.BoundedSemaphore(config.max_in_flight)
        self._counter_lock = threading.Lock()
        self.upstream_calls = 0

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def _status_error(self, path: str, response: httpx.Response, attempts: int) -> Exception:
        message = f"Backend '{self.config.role}' answered {path} with status {response.status_code}: {_excerpt(response)}"
        return BackendStatusError(message, response.status_code, _excerpt(response), attempts)

    def _send(self, path: str, body: bytes) -> httpx.Response:
        with self._counter_lock:
            self.upstream_calls += 1

        with self._in_flight:
            response = self._client.post(path, content=body, headers={"content-type": "application/json"})

        if response.status_code == 429 or response.status_code >= 500:
            logger.warning(f"Backend '{self.config.role}' answered {path} with status {response.status_code}, retry.")
            raise _RetryableStatus(response)

        return response

    def _fetch(self, path: str, body: bytes) -> tuple[bytes, str]:
        attempts = 0
        retrying = Retrying(
            stop=stop_after_attempt(self.config.max_attempts),
            wait=wait_random_exponential(multiplier=self.config.backoff_seconds, max=self.config.max_backoff_seconds),
            retry=retry_if_exception_type((_RetryableStatus, httpx.TransportError)),
            reraise=True,
        )

        try:
            for attempt in retrying:
                with attempt:
                    attempts = attempt.retry_state.attempt_number
                    response = self._send(path, body)

        except _RetryableStatus as e:
            error = self._status_error(path, e.response, attempts)
            logger.error(str(error))
            raise error

        except httpx.TransportError as e:
            logger.error(f"Backend '{self.config.role}' failed to reach {path} after {attempts} attempts: {e}")
            raise BackendError(f"Backend '{self.config.role}' failed to reach {path} after {attempts} attempts: {e}", attempts)

        if not response.is_success:
            error = self._status_error(path, response, attempts)
            logger.error(str(error))
            raise error

        return response.content, response.headers.get("content-type", "")

    def post(self, path: str, body: bytes) -> tuple[bytes, str, bool]:
        """
        Send a request, or answer it from the cache.
        With a cache, identical requests in flight at the same time reach the server once.

        :param path: Endpoint path.
        :type path: str
        :param body: Request body.
        :type body: bytes
        :return: ``(response body, content type, served from cache)``.
        :rtype: tuple
        """
        if self.cache is None:
            return *self._fetch(path, body), False

        key = cache_key(path, body)
        with self.cache.claim(key):
            hit = self.cache.get(key)
            if hit is not None:
                return hit[0], hit[1]["content_type"], True

            content, content_type = self._fetch(path, body)
            self.cache.put(
                key,
                content,
                {"content_type": content_type, "path": path, "model": self.config.model_name, "role": self.config.role},
            )

        return content, content_type, False


class HTTPChatBackend(HTTPBackendBase, ChatVisionBackend):
    """
    OpenAI-compatible chat completions.
    """

    def chat(self, request: ChatRequest) -> ChatResponse:
        """
        Send a chat request.

        :param request: Request.
        :type request: ChatRequest
        :return: Reply text and usage. Missing usage is reported as zeros with ``usage_missing`` set.
        :rtype: ChatResponse
        """
        body = dump_canonical_json(request.to_wire(self.config.model_name))
        raw, _, cached = self.post(CHAT_PATH, body)

        try:
            reply = loads(raw)
            content = reply["choices"][0]["message"]["content"]
        except (JSONDecodeError, KeyError, IndexError, TypeError) as e:
            logger.error(f"Malformed chat completion from backend '{self.config.role}': {e}")
            raise BackendError(f"Malformed chat completion from backend '{self.config.role}': {e}")

        if isinstance(content, list):
            content = "".join(_part.get("text", "") for _part in content if isinstance(_part, dict))

        usage = reply.get("usage")
        if not isinstance(usage, dict) or "prompt_tokens" not in usage:
            logger.warning(f"Backend '{self.config.role}' reported no token usage, record 0 tokens.")
            return ChatResponse(content or "", usage_missing=True, cached=cached)

        return ChatResponse(
            content or "",
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            cached=cached,
        )


def _image_kind(content_type: str) -> ImageKind:
    return ImageKind.SCENE if content_type.startswith(SCENE_MEDIA_TYPE) else ImageKind.RASTER


class HTTPGeneratorBackend(HTTPBackendBase, GeneratorBackend):
    """
    Text-to-image server.
    """

    def generate(self, prompt_text: str, store: ArtifactStore, seed: Optional[int] = None) -> ImageRef:
        self.check_prompt(prompt_text)
        body = dump_canonical_json(
            {"model": self.config.model_name, "prompt": prompt_text, "seed": self.config.seed if seed is None else seed}
        )
        payload, content_type, _ = self.post(GENERATE_PATH, body)
        return store.put(payload, _image_kind(content_type), Producer.GENERATOR, 0)


class HTTPEditorBackend(HTTPBackendBase, EditorBackend):
    """
    Instruction-guided editing server.
    """

    def _status_error(self, path: str, response: httpx.Response, attempts: int) -> Exception:
        if response.status_code == 422:
            return InstructionRejectedError(f"Backend '{self.config.role}' rejected the instruction: {_excerpt(response)}")
        return super()._status_error(path, response, attempts)

    def edit(self, image: ImageRef, instruction: EditInstruction, store: ArtifactStore) -> ImageRef:
        body = dump_canonical_json(
            {
                "model": self.config.model_name,
                "image": {"media_type": image.media_type, "data": b64encode(store.get(image)).decode("ascii")},
                "instruction": instruction.text,
                "seed": self.config.seed,
            }
        )
        payload, content_type, _ = self.post(EDIT_PATH, body)
        return store.put(payload, _image_kind(content_type), Producer.EDITOR, image.step_index + 1)


__all__ = [
    "CHAT_PATH",
    "GENERATE_PATH",
    "EDIT_PATH",
    "HTTPBackendBase",
    "HTTPChatBackend",
    "HTTPGeneratorBackend",
    "HTTPEditorBackend",
]
