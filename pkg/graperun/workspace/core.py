"""
graperun.workspace.core
#######################

Core functions to prepare the ``graperun`` workspace and run directories.

.. autosummary::
    :toctree: generated/

    prepare_workspace
    check_workspace
    get_artifact_store
    create_run_dir
    check_run_dir
    trace_file_stem
    write_trace
    read_trace
    write_run_outputs
"""

import re
from datetime import datetime
from json import dumps, loads
from os import replace
from os.path import basename, exists
from tempfile import NamedTemporaryFile
from typing import Optional, Sequence

import pandas as pd

from ..core import GrapeRunConfig, ReportError
from ..eval.report import step_table, summary_table, trace_table
from ..log import logger
from ..model import ArtifactStore, PipelineTrace
from ..utils import check_path, dump_canonical_json

RUN_DIR_ENTRIES = ("manifest.jsonl", "traces", "scores.csv", "summary.csv", "config.snapshot")

_UNSAFE_CHARS = re.compile(r"[^A-Za-z0-9._-]+")


def prepare_workspace(config: GrapeRunConfig):
    """
    Create the directories of the workspace if they don't exist.

    =================================== ===========================================
    Path                                Purpose
    =================================== ===========================================
    ``$ROOT/tmp``                       Temporary files.
    ``$ROOT/cache/responses``           Response cache of HTTP backends.
    ``$ROOT/cache/artifacts``           Content-addressed image store.
    ``output_path``                     Run directories.
    =================================== ===========================================

    :param config: Loaded config.
    :type config: GrapeRunConfig
    """
    cache_path = config.get_cache_path()
    logger.debug(f"Prepare workspace, cache at '{cache_path}'")

    check_path(
        config.parse_resource_uri(config.GRAPERUN_TEMP_PATH),
        f"{cache_path}/responses",
        f"{cache_path}/artifacts",
        config.get_output_path(),
    )


def check_workspace(config: GrapeRunConfig) -> bool:
    """
    Check if the workspace exists.

    :param config: Loaded config.
    :type config: GrapeRunConfig
    :return: ``True`` if every directory exists.
    :rtype: bool
    """
    cache_path = config.get_cache_path()
    return all(
        exists(_path)
        for _path in (
            config.parse_resource_uri(config.GRAPERUN_TEMP_PATH),
            f"{cache_path}/artifacts",
            config.get_output_path(),
        )
    )


def get_artifact_store(config: GrapeRunConfig) -> ArtifactStore:
    """
    Open the image store of the workspace. Images outlive run directories, so reruns find them.

    :param config: Loaded config.
    :type config: GrapeRunConfig
    :return: Store.
    :rtype: ArtifactStore
    """
    return ArtifactStore(f"{config.get_cache_path()}/artifacts")


def create_run_dir(output_path: str, label: str = "") -> str:
    """
    Create a run directory named ``<timestamp>-<label>``.

    :param output_path: Parent directory.
    :type output_path: str
    :param label: Label appended to the timestamp, unsafe characters become ``_``.
    :type label: str
    :return: Run directory path.
    :rtype: str
    """
    name = datetime.now().strftime("%Y%m%d-%H%M%S")
    if label != "":
        name = f"{name}-{_UNSAFE_CHARS.sub('_', label)}"

    run_dir = f"{output_path}/{name}"
    suffix = 1
    while exists(run_dir):
        suffix += 1
        run_dir = f"{output_path}/{name}.{suffix}"

    check_path(f"{run_dir}/traces")
    logger.info(f"Run directory: '{run_dir}'")
    return run_dir


def check_run_dir(run_dir: str) -> bool:
    """
    Check if a directory can be resumed: it must hold a ``traces`` directory.

    :param run_dir: Directory path.
    :type run_dir: str
    :return: ``True`` if it looks like a run directory.
    :rtype: bool
    """
    return exists(f"{run_dir}/traces")


def trace_file_stem(prompt_id: str, mode: str, seed: int) -> str:
    """
    File name, without extension, of a trace in ``traces/``.

    :param prompt_id: Prompt id.
    :type prompt_id: str
    :param mode: Trace mode.
    :type mode: str
    :param seed: Seed.
    :type seed: int
    :return: Stem.
    :rtype: str
    """
    return f"{_UNSAFE_CHARS.sub('_', prompt_id)}__{mode}__s{seed}"


def _atomic_write(path: str, payload: bytes):
    with NamedTemporaryFile("wb", dir=path.rsplit("/", 1)[0], delete=False) as f:
        f.write(payload)
        temp_path = f.name
    replace(temp_path, path)


def write_trace(run_dir: str, trace: PipelineTrace) -> str:
    """
    Write a trace manifest and its timings sidecar to ``traces/``.

    :param run_dir: Run directory.
    :type run_dir: str
    :param trace: Trace.
    :type trace: PipelineTrace
    :return: Manifest path.
    :rtype: str
    """
    stem = trace_file_stem(trace.prompt.id, trace.mode, trace.seed)
    path = f"{run_dir}/traces/{stem}.json"

    # sidecar first: a manifest without timings is complete, the reverse isn't
    _atomic_write(f"{run_dir}/traces/{stem}.timings.json", dumps(trace.accounting.timings(), indent=2).encode("utf-8"))
    _atomic_write(path, dump_canonical_json(trace.to_manifest()))

    return path


def read_trace(run_dir: str, prompt_id: str, mode: str, seed: int) -> Optional[PipelineTrace]:
    """
    Read a trace written by :func:`write_trace`.

    :param run_dir: Run directory.
    :type run_dir: str
    :param prompt_id: Prompt id.
    :type prompt_id: str
    :param mode: Trace mode.
    :type mode: str
    :param seed: Seed.
    :type seed: int
    :return: Trace, or ``None`` if it wasn't written.
    :rtype: PipelineTrace | None
    """
    stem = trace_file_stem(prompt_id, mode, seed)
    path = f"{run_dir}/traces/{stem}.json"
    if not exists(path):
        return None

    timings = None
    if exists(f"{run_dir}/traces/{stem}.timings.json"):
        with open(f"{run_dir}/traces/{stem}.timings.json", "r") as f:
            timings = loads(f.read())

    with open(path, "r") as f:
        return PipelineTrace.from_manifest(loads(f.read()), timings)


def write_run_outputs(run_dir: str, traces: Sequence[PipelineTrace]) -> Optional[pd.DataFrame]:
    """
    Write ``manifest.jsonl``, ``scores.csv`` and ``summary.csv`` of a run. Traces are written in the given order.

    :param run_dir: Run directory.
    :type run_dir: str
    :param traces: Traces of the run.
    :type traces: Sequence[PipelineTrace]
    :return: Summary table, ``None`` if there are no traces.
    :rtype: pd.DataFrame | None
    """
    manifests = [_trace.to_manifest() for _trace in traces]

    with open(f"{run_dir}/manifest.jsonl", "wb") as f:
        for _manifest in manifests:
            f.write(dump_canonical_json(_manifest) + b"\n")

    step_table(manifests).to_csv(f"{run_dir}/scores.csv", index=False, float_format="%.6f")

    try:
        summary = summary_table(trace_table(manifests))
    except ReportError:
        logger.warning(f"No traces in '{basename(run_dir)}', summary.csv isn't written.")
        return None

    summary.to_csv(f"{run_dir}/summary.csv", index=False, float_format="%.6f")
    return summary


__all__ = [
    "RUN_DIR_ENTRIES",
    "prepare_workspace",
    "check_workspace",
    "get_artifact_store",
    "create_run_dir",
    "check_run_dir",
    "trace_file_stem",
    "write_trace",
    "read_trace",
    "write_run_outputs",
]
