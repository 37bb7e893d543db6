"""
graperun.run
############

.. autosummary::
    :toctree: generated/

    RunResult
    GrapeRun

This module defines the class used by ``graperun`` to run a prompt set through the pipelines.

Use ``GrapeRun`` to run benchmarks
**********************************

:class:`GrapeRun` takes care of:

* Loading the config file and the planner prompts.
* Preparing the workspace and creating (or resuming) a run directory.
* Building the backends named in the config.
* Running every prompt, seed and mode in a bounded worker pool, one structured log correlation id per task.
* Writing trace manifests, scores and the summary.
* Recording HTTP exchanges to fixtures, or replaying them instead of calling the endpoints.

.. code-block:: python
    :caption: main.py

    from graperun.model import load_prompt_set
    from graperun.run import GrapeRun

    with GrapeRun("config.toml") as grape_run:
        result = grape_run.run(load_prompt_set("prompts.jsonl"))

    # record every HTTP exchange to fixtures/<role>.json
    with GrapeRun("config.toml", record_dir="fixtures") as grape_run:
        grape_run.run(load_prompt_set("prompts.jsonl"))
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from os.path import exists
from typing import Optional, Sequence

import httpx

from .backends.factory import BackendSet, build_backends
from .core import BACKEND_ROLES, ExchangeRecorder, GrapeRunConfig, PreconditionError, ReplayTransport
from .log import correlation_context, logger, logger_add_file_handler, logger_remove_handler
from .model import PipelineTrace, PromptRecord, TraceStatus
from .pipeline import RunConfig, account, run_base, run_grape, score_trace
from .planner import Planner, load_few_shot_examples, load_planner_prompts
from .workspace import (
    check_run_dir,
    create_run_dir,
    get_artifact_store,
    prepare_workspace,
    read_trace,
    write_run_outputs,
    write_trace,
)


@dataclass
class RunResult:
    """
    Outcome of :meth:`GrapeRun.run`.

    ``failures`` maps a task label (``prompt_id/mode/seed``) to the error which stopped it; such tasks have no trace.
    """

    run_dir: str
    traces: list[PipelineTrace] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)
    resumed: int = 0

    @property
    def plan_failed(self) -> int:
        return sum(_trace.status is TraceStatus.PLAN_FAILED for _trace in self.traces)

    @property
    def ok(self) -> bool:
        """
        ``True`` if every task produced a trace and every planner call succeeded.
        """
        return len(self.failures) == 0 and self.plan_failed == 0


@dataclass(frozen=True)
class _Task:
    prompt: PromptRecord
    mode: str
    seed: int

    @property
    def label(self) -> str:
        return f"{self.prompt.id}/{self.mode}/s{self.seed}"


class GrapeRun:
    """
    ``GrapeRun`` is a context class to run prompt sets with ``graperun``.
    """

    def __init__(
        self,
        config_file: str,
        run_overrides: Optional[dict] = None,
        resume_dir: Optional[str] = None,
        transports: Optional[dict[str, httpx.BaseTransport]] = None,
        record_dir: Optional[str] = None,
        replay_dir: Optional[str] = None,
    ):
        """
        Load the config. Missing or broken config files raise here, before anything is written.

        ``record_dir`` and ``replay_dir`` only apply to HTTP backends, and override ``transports``.

        :param config_file: ``graperun`` config file path.
        :type config_file: str
        :param run_overrides: Values replacing keys of the ``[run]`` section, ``None`` values are ignored.
        :type run_overrides: dict | None
        :param resume_dir: Run directory to resume. Traces already written there are reused.
        :type resume_dir: str | None
        :param transports: ``httpx`` transports keyed by backend role, for tests and recording.
        :type transports: dict | None
        :param record_dir: Directory where the exchanges of every role are saved as ``<role>.json`` on exit.
        :type record_dir: str | None
        :param replay_dir: Directory of ``<role>.json`` fixtures to serve instead of calling the endpoints.
        :type replay_dir: str | None
        """
        self.config = GrapeRunConfig.from_config_file(config_file)
        if run_overrides is not None:
            self.config.update_run_config(run_overrides)

        if resume_dir is not None and not check_run_dir(resume_dir):
            logger.error(f"'{resume_dir}' isn't a run directory, can't resume it.")
            raise PreconditionError(f"'{resume_dir}' isn't a run directory, can't resume it.")

        if record_dir is not None and replay_dir is not None:
            logger.error("Can't record and replay HTTP exchanges in the same run.")
            raise PreconditionError("Can't record and replay HTTP exchanges in the same run.")

        self._resume_dir = resume_dir
        self._recorders: list[ExchangeRecorder] = []

        if record_dir is not None:
            self._recorders = [ExchangeRecorder(httpx.HTTPTransport(), f"{record_dir}/{_role}.json") for _role in BACKEND_ROLES]
            transports = dict(zip(BACKEND_ROLES, self._recorders))

        elif replay_dir is not None:
            transports = {
                _role: ReplayTransport.from_fixture_file(f"{replay_dir}/{_role}.json")
                for _role in BACKEND_ROLES
                if exists(f"{replay_dir}/{_role}.json")
            }
            if len(transports) == 0:
                logger.error(f"No fixture file in '{replay_dir}'.")
                raise FileNotFoundError(f"No fixture file in '{replay_dir}'.")

        self._transports = transports

        self.run_dir = ""
        self.store = None
        self.backends: Optional[BackendSet] = None
        self.planner: Optional[Planner] = None
        self._log_handler = None

    def __enter__(self):
        prepare_workspace(self.config)

        run_config = self.config.get_run_config()
        if self._resume_dir is not None:
            self.run_dir = self._resume_dir
            logger.info(f"Resume run directory '{self.run_dir}'")
        else:
            self.run_dir = create_run_dir(self.config.get_output_path(), run_config["label"])

        self._log_handler = logger_add_file_handler(self.run_dir)
        self.config.save_graperun_config(f"{self.run_dir}/config.snapshot")

        prompts_dir = self.config.get_prompts_path()
        planner_prompts = load_planner_prompts(prompts_dir)

        self.store = get_artifact_store(self.config)
        self.backends = build_backends(self.config, planner_prompts, self._transports)

        planner_config = self.backends.configs["planner"]
        self.planner = Planner(
            self.backends.planner,
            planner_prompts,
            self.store,
            load_few_shot_examples(prompts_dir, self.store),
            mode=run_config["planner_mode"],
            attempts=planner_config.max_attempts,
            temperature=planner_config.temperature,
            seed=planner_config.seed,
        )

        logger.debug("Enter graperun context")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.backends is not None:
            self.backends.close()

        for _recorder in self._recorders:
            _recorder.export_fixture_file()

        if self._log_handler is not None:
            logger_remove_handler(self._log_handler)
            self._log_handler = None

        logger.debug("Exit graperun context")

    def _check_context(self):
        if self.backends is None or self.planner is None or self.store is None:
            logger.error("Use GrapeRun in a `with` statement before running prompts.")
            raise RuntimeError("Use GrapeRun in a `with` statement before running prompts.")

    def _tasks(self, prompts: Sequence[PromptRecord]) -> list[_Task]:
        run_config = self.config.get_run_config()
        modes = ["base", "grape"] if run_config["mode"] == "both" else [run_config["mode"]]

        return [_Task(_prompt, _mode, _seed) for _prompt in prompts for _seed in run_config["seeds"] for _mode in modes]

    def _trace_mode(self, task: _Task) -> str:
        if task.mode == "base":
            return "base"
        return RunConfig.from_dict(self.config.get_run_config()).trace_mode

    def _run_task(self, task: _Task) -> PipelineTrace:
        assert self.backends is not None and self.planner is not None and self.store is not None
        run_config = self.config.get_run_config()

        if task.mode == "base":
            trace = run_base(task.prompt, self.backends.generator, self.store, task.seed)
        else:
            trace = run_grape(
                task.prompt,
                self.backends.generator,
                self.planner,
                self.backends.editor,
                self.store,
                RunConfig.from_dict(run_config, task.seed),
            )
            planner_config = self.backends.configs["planner"]
            trace = trace.with_accounting(
                account(trace, planner_config.price_per_1k_prompt_tokens, planner_config.price_per_1k_completion_tokens)
            )

        if run_config["score"]:
            if len(task.prompt.questions) == 0:
                logger.warning(f"Prompt '{task.prompt.id}' has no questions, its trace isn't scored.")
            else:
                trace = score_trace(trace, self.backends.vqa, self.store, run_config["qa_aggregation"])

        return trace

    def _process(self, task: _Task) -> tuple[Optional[PipelineTrace], Optional[str], bool]:
        with correlation_context(task.label):
            existing = read_trace(self.run_dir, task.prompt.id, self._trace_mode(task), task.seed)
            if existing is not None:
                logger.debug("Trace exists, skip.")
                return existing, None, True

            try:
                trace = self._run_task(task)
            except Exception as e:
                logger.error(f"Task failed: {type(e).__name__}: {e}")
                return None, f"{type(e).__name__}: {e}", False

            write_trace(self.run_dir, trace)
            logger.info(f"Done: {trace.status.value}, {trace.executed_steps} of {len(trace.plan)} steps executed.")
            return trace, None, False

    def run(self, prompts: Sequence[PromptRecord]) -> RunResult:
        """
        Run every prompt with every seed and mode of the ``[run]`` section, then write the run outputs.

        A failing task is logged and reported in :attr:`RunResult.failures`, other tasks go on.

        :param prompts: Prompt records.
        :type prompts: Sequence[PromptRecord]
        :return: Result.
        :rtype: RunResult
        """
        self._check_context()

        run_config = self.config.get_run_config()
        tasks = self._tasks(prompts)
        logger.info(f"Run {len(tasks)} tasks of {len(prompts)} prompts, seeds {run_config['seeds']}, {run_config['jobs']} jobs.")

        with ThreadPoolExecutor(max_workers=run_config["jobs"]) as executor:
            outcomes = list(executor.map(self._process, tasks))

        result = RunResult(self.run_dir)
        for _task, (_trace, _failure, _resumed) in zip(tasks, outcomes):
            if _trace is not None:
                result.traces.append(_trace)
                result.resumed += int(_resumed)
            if _failure is not None:
                result.failures[_task.label] = _failure

        write_run_outputs(self.run_dir, result.traces)

        assert self.backends is not None
        calls = self.backends.upstream_calls()
        logger.info(
            f"{len(result.traces)} traces ({result.resumed} resumed), {len(result.failures)} failed tasks, "
            f"{result.plan_failed} plan failures. Upstream calls: {calls}"
        )

        return result


__all__ = ["RunResult", "GrapeRun"]
