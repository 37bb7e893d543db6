import json
from glob import glob
from os import remove
from os.path import exists

import httpx
import pytest

from graperun.core import PreconditionError
from graperun.model import Benchmark, TraceStatus
from graperun.run import GrapeRun
from graperun.simworld import degrade, generate_prompt_set, parse_target_scene, serialize_scene
from graperun.workspace import RUN_DIR_ENTRIES, trace_file_stem

HTTP_GENERATOR = {"generator": {"kind": "http", "endpoint_url": "http://generator.test", "max_retries": 0}}


def _prompts(count: int = 2, k: int = 3):
    return generate_prompt_set(count, k, seed=0, benchmark=Benchmark.CONCEPTMIX)


def _read(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def test_run_writes_run_directory(config_file):
    with GrapeRun(config_file()) as grape_run:
        result = grape_run.run(_prompts())

    assert result.ok
    assert result.resumed == 0
    assert len(result.traces) == 4
    assert sorted(_trace.mode for _trace in result.traces) == ["base", "base", "grape", "grape"]
    assert all(len(_trace.scores) == len(_trace.images) for _trace in result.traces)

    for _entry in RUN_DIR_ENTRIES:
        assert exists(f"{result.run_dir}/{_entry}")
    assert len(glob(f"{result.run_dir}/traces/*.timings.json")) == 4

    with open(f"{result.run_dir}/run.jsonl", "r") as f:
        correlation_ids = {json.loads(_line)["correlation_id"] for _line in f}
    assert "sim-k3-0000/grape/s0" in correlation_ids


def test_resume_reuses_traces(config_file):
    prompts = _prompts()

    with GrapeRun(config_file()) as grape_run:
        first = grape_run.run(prompts)

    grape = next(_trace for _trace in first.traces if _trace.mode == "grape")
    stem = trace_file_stem(grape.prompt.id, grape.mode, grape.seed)
    manifest_path = f"{first.run_dir}/traces/{stem}.json"
    manifest = _read(manifest_path)
    run_manifest = _read(f"{first.run_dir}/manifest.jsonl")

    remove(manifest_path)
    remove(f"{first.run_dir}/traces/{stem}.timings.json")

    with GrapeRun(config_file(), resume_dir=first.run_dir) as grape_run:
        second = grape_run.run(prompts)

    assert second.ok
    assert second.run_dir == first.run_dir
    assert second.resumed == 3
    assert _read(manifest_path) == manifest
    assert _read(f"{first.run_dir}/manifest.jsonl") == run_manifest


def _scene_server():
    """
    HTTP generator answering with a degraded scene of the requested prompt, and the prompts it was asked for.
    """
    prompts: list[str] = []

    def handler(request: httpx.Request) -> httpx.Response:
        prompt = json.loads(request.content)["prompt"]
        prompts.append(prompt)
        scene = degrade(parse_target_scene(prompt), 0.5, len(prompt))
        return httpx.Response(200, content=serialize_scene(scene), headers={"content-type": "text/x-graperun-scene"})

    return httpx.MockTransport(handler), prompts


def test_interrupted_run_resumes_to_the_same_outputs(config_file):
    prompts = _prompts(4)
    backend = {"generator": {**HTTP_GENERATOR["generator"], "cache": False}}

    transport, asked = _scene_server()
    with GrapeRun(config_file(backend=backend), transports={"generator": transport}) as grape_run:
        first = grape_run.run(prompts[:2])

    assert sorted(asked) == sorted(_prompt.text for _prompt in prompts[:2] for _ in range(2))

    transport, asked = _scene_server()
    with GrapeRun(config_file(backend=backend), transports={"generator": transport}, resume_dir=first.run_dir) as grape_run:
        resumed = grape_run.run(prompts)

    assert resumed.ok
    assert resumed.resumed == 4
    assert sorted(asked) == sorted(_prompt.text for _prompt in prompts[2:] for _ in range(2))

    transport, _ = _scene_server()
    with GrapeRun(config_file(backend=backend), transports={"generator": transport}) as grape_run:
        uninterrupted = grape_run.run(prompts)

    assert uninterrupted.run_dir != resumed.run_dir
    for _name in ("manifest.jsonl", "scores.csv", "summary.csv"):
        assert _read(f"{resumed.run_dir}/{_name}") == _read(f"{uninterrupted.run_dir}/{_name}")


def test_run_overrides(config_file):
    overrides = {"mode": "base", "seeds": [0, 1], "score": False, "label": "base only", "jobs": None}

    with GrapeRun(config_file(), run_overrides=overrides) as grape_run:
        result = grape_run.run(_prompts())

    assert result.run_dir.endswith("-base_only")
    assert len(result.traces) == 4
    assert {_trace.mode for _trace in result.traces} == {"base"}
    assert sorted(_trace.seed for _trace in result.traces) == [0, 0, 1, 1]
    assert all(not _trace.scores for _trace in result.traces)


def test_naive_planner_mode(config_file):
    with GrapeRun(config_file(run={"mode": "grape", "planner_mode": "naive"})) as grape_run:
        result = grape_run.run(_prompts())

    assert result.ok
    assert {_trace.mode for _trace in result.traces} == {"grape-naive"}
    assert all(_trace.status is TraceStatus.COMPLETE for _trace in result.traces)


def test_http_generator_responses_are_cached(config_file, mock_server):
    prompt = _prompts(1, 1)[0]
    scene = serialize_scene(parse_target_scene(prompt.text))
    transport, requests = mock_server((200, {"content": scene, "headers": {"content-type": "text/x-graperun-scene"}}))

    with GrapeRun(config_file(run={"jobs": 2}, backend=HTTP_GENERATOR), transports={"generator": transport}) as grape_run:
        result = grape_run.run([prompt])
        calls = grape_run.backends.upstream_calls()

    assert result.ok
    # base and grape ask for the same image, possibly at once
    assert len(requests) == 1
    assert calls["generator"] == 1

    grape = next(_trace for _trace in result.traces if _trace.mode == "grape")
    assert len(grape.plan) == 0
    assert grape.scores[-1].dsg == 1.0


def test_failed_tasks_are_reported(config_file, mock_server):
    transport, _ = mock_server((404, {"text": "no such model"}))

    with GrapeRun(config_file(backend=HTTP_GENERATOR), transports={"generator": transport}) as grape_run:
        result = grape_run.run(_prompts())

    assert not result.ok
    assert result.traces == []
    assert set(result.failures) == {
        "sim-k3-0000/base/s0",
        "sim-k3-0000/grape/s0",
        "sim-k3-0001/base/s0",
        "sim-k3-0001/grape/s0",
    }
    assert "BackendStatusError" in result.failures["sim-k3-0000/base/s0"]
    assert exists(f"{result.run_dir}/manifest.jsonl")
    assert not exists(f"{result.run_dir}/summary.csv")


def test_preconditions(tmp_path, config_file):
    path = config_file()

    with pytest.raises(PreconditionError):
        GrapeRun(path, resume_dir=str(tmp_path / "nowhere"))

    with pytest.raises(PreconditionError):
        GrapeRun(path, record_dir=str(tmp_path / "a"), replay_dir=str(tmp_path / "b"))

    with pytest.raises(FileNotFoundError):
        GrapeRun(path, replay_dir=str(tmp_path))

    with pytest.raises(RuntimeError):
        GrapeRun(path).run(_prompts())
