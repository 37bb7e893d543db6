import httpx
import pytest
import tomli_w

from graperun.model import ArtifactStore
from graperun.planner import load_planner_prompts
from graperun.res import RES_PATH

BUNDLED_PROMPTS = f"{RES_PATH}/prompts"


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(str(tmp_path / "store"))


@pytest.fixture
def planner_prompts():
    return load_planner_prompts(BUNDLED_PROMPTS)


@pytest.fixture
def config_file(tmp_path):
    """
    Write a config file using the simulated world for every role, with some keys replaced.
    """

    def write(run: dict | None = None, simworld: dict | None = None, backend: dict | None = None) -> str:
        config = {
            "work_dir": "./work",
            "output_path": "./runs",
            "run": {"jobs": 2, **(run or {})},
            "simworld": {"error_rate": 0.5, **(simworld or {})},
        }
        if backend is not None:
            config["backend"] = backend

        path = tmp_path / "config.toml"
        with open(path, "wb") as f:
            tomli_w.dump(config, f)
        return str(path)

    return write


@pytest.fixture
def mock_server():
    """
    Build an ``httpx`` mock transport answering with the given ``(status, response kwargs)`` pairs in order.
    The last pair answers every further request. Requests are collected in the returned list.
    """

    def build(*responses: tuple[int, dict]) -> tuple[httpx.MockTransport, list[httpx.Request]]:
        requests: list[httpx.Request] = []
        queue = list(responses)

        def handler(request: httpx.Request) -> httpx.Response:
            requests.append(request)
            status, kwargs = queue.pop(0) if len(queue) > 1 else queue[0]
            return httpx.Response(status, **kwargs)

        return httpx.MockTransport(handler), requests

    return build


def completion(text: str, prompt_tokens: int = 10, completion_tokens: int = 2) -> dict:
    return {
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    }


@pytest.fixture
def chat_completion():
    return completion
