"""
graperun.pipeline
#################

.. autosummary::
    :toctree: generated/

    RunConfig
    run_grape
    run_base
    score_trace
    account

Generate, plan, edit
********************

:func:`run_grape` generates an image from the text prompt, asks the planner for an edit plan, and applies the
plan one instruction at a time, each edit starting from the previous image:

.. code-block:: Python

    trace = run_grape(prompt, generator, planner, editor, store, RunConfig(max_edit_steps=8))
    trace = score_trace(trace, vqa, store)
    trace = trace.with_accounting(account(trace, 0.0025, 0.01))

Every image is stored before the next step starts, so a failing edit leaves a ``partial`` trace
with all images produced so far. A planner failure, including a planner request that can't be built,
leaves a ``plan-failed`` trace holding only the generated image. Generation failures propagate.

:func:`run_base` is the baseline without planning and editing.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from time import perf_counter
from typing import Optional

from .backends.base import EditorBackend, GeneratorBackend, VQABackend
from .core import (
    BackendError,
    InstructionRejectedError,
    OracleUnanswerableError,
    PlanFailureError,
    PreconditionError,
    VQAUnparseableError,
)
from .core._config import PLANNER_MODES, QA_AGGREGATIONS
from .eval import Answer, ScoreReport, build_score_report
from .log import logger
from .model import ArtifactStore, CostReport, EditPlan, ImageRef, PipelineTrace, PromptRecord, TraceStatus
from .planner import Planner

DEFAULT_MAX_EDIT_STEPS = 8
UNANSWERED_ERRORS = (VQAUnparseableError, OracleUnanswerableError, BackendError)


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of a single pipeline run.

    ``replan_rounds`` is experimental: after a plan has been executed, the planner is asked again on the last image,
    at most this many times. ``max_edit_steps`` caps the merged plan.
    """

    max_edit_steps: int = DEFAULT_MAX_EDIT_STEPS
    planner_mode: str = "structured"
    seed: int = 0
    replan_rounds: int = 0
    qa_aggregation: str = "per-question"

    def __post_init__(self):
        if self.max_edit_steps < 0 or self.replan_rounds < 0:
            logger.error(f"'max_edit_steps' and 'replan_rounds' can't be negative: {self}")
            raise PreconditionError(f"'max_edit_steps' and 'replan_rounds' can't be negative: {self}")

        if self.planner_mode not in PLANNER_MODES:
            logger.error(f"Unknown planner mode '{self.planner_mode}', valid values: {PLANNER_MODES}")
            raise PreconditionError(f"Unknown planner mode '{self.planner_mode}', valid values: {PLANNER_MODES}")

        if self.qa_aggregation not in QA_AGGREGATIONS:
            logger.error(f"Unknown QA aggregation '{self.qa_aggregation}', valid values: {QA_AGGREGATIONS}")
            raise PreconditionError(f"Unknown QA aggregation '{self.qa_aggregation}', valid values: {QA_AGGREGATIONS}")

    @classmethod
    def from_dict(cls, value: dict, seed: int = 0) -> "RunConfig":
        """
        Create from the ``[run]`` section of the config file. ``seeds`` holds a list there, so the seed
        of this run is passed separately.

        :param value: ``[run]`` section.
        :type value: dict
        :param seed: Seed of this run.
        :type seed: int
        :return: Run config.
        :rtype: RunConfig
        """
        return cls(
            max_edit_steps=value.get("max_edit_steps", DEFAULT_MAX_EDIT_STEPS),
            planner_mode=value.get("planner_mode", "structured"),
            seed=seed,
            replan_rounds=value.get("replan_rounds", 0),
            qa_aggregation=value.get("qa_aggregation", "per-question"),
        )

    @property
    def trace_mode(self) -> str:
        """
        Mode label written to trace manifests.
        """
        return "grape" if self.planner_mode == "structured" else "grape-naive"


def _execute(
    plan: EditPlan, first_step: int, images: list[ImageRef], editor: EditorBackend, store: ArtifactStore, budget: int
) -> Optional[str]:
    """
    Execute ``plan.steps[first_step:]`` until ``len(images) - 1`` reaches ``budget``.
    New images are appended to ``images``.

    :return: Failure message if an edit failed, else ``None``.
    """
    for _step in plan.steps[first_step:]:
        if len(images) - 1 >= budget:
            break

        try:
            image = editor.edit(images[-1], _step, store)
        except (InstructionRejectedError, BackendError) as e:
            logger.warning(f"Edit step {_step.ordinal} '{_step.text}' failed, stop editing: {e}")
            return f"step {_step.ordinal}: {e}"

        logger.debug(f"Step {_step.ordinal}: '{_step.text}' -> {image.content_id[:12]}")
        images.append(image)

    return None


def _merge_usage(first: CostReport, second: CostReport) -> CostReport:
    return CostReport(
        planner_prompt_tokens=first.planner_prompt_tokens + second.planner_prompt_tokens,
        planner_completion_tokens=first.planner_completion_tokens + second.planner_completion_tokens,
        usage_missing=first.usage_missing or second.usage_missing,
        planner_retries=first.planner_retries + second.planner_retries,
    )


def run_grape(
    prompt: PromptRecord,
    generator: GeneratorBackend,
    planner: Planner,
    editor: EditorBackend,
    store: ArtifactStore,
    config: Optional[RunConfig] = None,
) -> PipelineTrace:
    """
    Run generate, plan and edit on one prompt.

    :param prompt: Prompt record.
    :type prompt: PromptRecord
    :param generator: Text-to-image backend.
    :type generator: GeneratorBackend
    :param planner: Planner. Its mode is switched to ``config.planner_mode`` if they differ.
    :type planner: Planner
    :param editor: Editing backend.
    :type editor: EditorBackend
    :param store: Store which keeps every image.
    :type store: ArtifactStore
    :param config: Run settings.
    :type config: RunConfig
    :return: Trace. Scores and planning cost are attached by :func:`score_trace` and :func:`account`.
    :rtype: PipelineTrace
    """
    config = RunConfig() if config is None else config
    if planner.mode != config.planner_mode:
        planner = planner.with_mode(config.planner_mode)

    start_time = perf_counter()
    generated = generator.generate(prompt.text, store, seed=config.seed)
    generation_seconds = perf_counter() - start_time

    start_time = perf_counter()
    try:
        report, usage = planner.plan(prompt, generated)

    except (PlanFailureError, BackendError, PreconditionError) as e:
        logger.warning(f"Planning failed for '{prompt.id}': {e}")
        attempts = e.attempts if isinstance(e, PlanFailureError) else 1
        accounting = CostReport(
            generation_seconds=generation_seconds,
            planning_seconds=perf_counter() - start_time,
            planner_retries=max(0, attempts - 1),
        )
        return PipelineTrace(
            prompt=prompt,
            images=(generated,),
            accounting=accounting,
            status=TraceStatus.PLAN_FAILED,
            failure=str(e),
            mode=config.trace_mode,
            seed=config.seed,
        )

    planning_seconds = perf_counter() - start_time
    plan = report.plan
    logger.info(f"Plan of '{prompt.id}' has {len(plan)} steps.")

    if len(plan) > config.max_edit_steps:
        logger.warning(f"Plan of '{prompt.id}' is truncated to {config.max_edit_steps} of {len(plan)} steps.")

    images = [generated]
    editing_seconds = 0.0

    start_time = perf_counter()
    failure = _execute(plan, 0, images, editor, store, config.max_edit_steps)
    editing_seconds += perf_counter() - start_time

    for _round in range(config.replan_rounds):
        if failure is not None or len(images) - 1 >= config.max_edit_steps or len(images) - 1 < len(plan):
            break

        start_time = perf_counter()
        try:
            new_report, new_usage = planner.plan(prompt, images[-1])
        except (PlanFailureError, BackendError, PreconditionError) as e:
            logger.warning(f"Re-planning round {_round + 1} of '{prompt.id}' failed, keep the current result: {e}")
            break
        finally:
            planning_seconds += perf_counter() - start_time

        usage = _merge_usage(usage, new_usage)
        if len(new_report.plan) == 0:
            logger.info(f"Re-planning round {_round + 1} of '{prompt.id}' found nothing to change.")
            break

        first_step = len(plan)
        plan = EditPlan.from_texts(
            plan.texts + new_report.plan.texts,
            plan.source,
            parsed_ops=[_step.parsed_op for _step in plan.steps + new_report.plan.steps],
        )
        logger.info(f"Re-planning round {_round + 1} of '{prompt.id}' adds {len(new_report.plan)} steps.")

        start_time = perf_counter()
        failure = _execute(plan, first_step, images, editor, store, config.max_edit_steps)
        editing_seconds += perf_counter() - start_time

    executed_steps = len(images) - 1
    accounting = CostReport(
        planner_prompt_tokens=usage.planner_prompt_tokens,
        planner_completion_tokens=usage.planner_completion_tokens,
        generation_seconds=generation_seconds,
        planning_seconds=planning_seconds,
        editing_seconds=editing_seconds,
        usage_missing=usage.usage_missing,
        planner_retries=usage.planner_retries,
    )

    return PipelineTrace(
        prompt=prompt,
        images=tuple(images),
        plan=plan,
        executed_steps=executed_steps,
        truncated=executed_steps < len(plan),
        accounting=accounting,
        status=TraceStatus.COMPLETE if failure is None else TraceStatus.PARTIAL,
        failure="" if failure is None else failure,
        report=report,
        mode=config.trace_mode,
        seed=config.seed,
    )


def run_base(prompt: PromptRecord, generator: GeneratorBackend, store: ArtifactStore, seed: int = 0) -> PipelineTrace:
    """
    Generate one image without planning or editing.

    :param prompt: Prompt record.
    :type prompt: PromptRecord
    :param generator: Text-to-image backend.
    :type generator: GeneratorBackend
    :param store: Artifact store.
    :type store: ArtifactStore
    :param seed: Generation seed.
    :type seed: int
    :return: Trace with one image and an empty plan.
    :rtype: PipelineTrace
    """
    start_time = perf_counter()
    generated = generator.generate(prompt.text, store, seed=seed)

    return PipelineTrace(
        prompt=prompt,
        images=(generated,),
        accounting=CostReport(generation_seconds=perf_counter() - start_time),
        mode="base",
        seed=seed,
    )


def _answer(vqa: VQABackend, image: ImageRef, question, store: ArtifactStore) -> Optional[Answer]:
    try:
        return vqa.answer_binary(image, question, store)
    except UNANSWERED_ERRORS as e:
        logger.debug(f"Question '{question.id}' unanswered: {e}")
        return None


def score_trace(
    trace: PipelineTrace, vqa: VQABackend, store: ArtifactStore, qa_aggregation: str = "per-question", jobs: int = 4
) -> PipelineTrace:
    """
    Answer the question graph of the prompt for every image of a trace.

    Questions the VQA backend can't answer count as no, and are tallied in ``unanswered_count``.

    :param trace: Trace.
    :type trace: PipelineTrace
    :param vqa: VQA backend.
    :type vqa: VQABackend
    :param store: Artifact store holding the images.
    :type store: ArtifactStore
    :param qa_aggregation: See :func:`qa_score <graperun.eval.scores.qa_score>`.
    :type qa_aggregation: str
    :param jobs: Questions answered concurrently.
    :type jobs: int
    :return: Trace with one :class:`ScoreReport` per image, in step order.
    :rtype: PipelineTrace
    """
    graph = trace.prompt.questions
    if len(graph) == 0:
        logger.error(f"Prompt '{trace.prompt.id}' has no questions, can't score its trace.")
        raise PreconditionError(f"Prompt '{trace.prompt.id}' has no questions, can't score its trace.")

    reports: list[ScoreReport] = []
    unanswered_total = 0

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        for _index, _image in enumerate(trace.images):
            results = list(executor.map(lambda _q: _answer(vqa, _image, _q, store), graph.questions))

            answers = {_q.id: Answer.NO if _result is None else _result for _q, _result in zip(graph.questions, results)}
            unanswered = sum(_result is None for _result in results)
            unanswered_total += unanswered

            reports.append(build_score_report(_index, answers, graph, unanswered, qa_aggregation))

    if unanswered_total > 0:
        logger.warning(f"{unanswered_total} questions of '{trace.prompt.id}' couldn't be answered and count as no.")

    return trace.with_scores(tuple(reports))


def account(
    trace: PipelineTrace, price_per_1k_prompt_tokens: float = 0.0, price_per_1k_completion_tokens: float = 0.0
) -> CostReport:
    """
    Compute the planning cost of a trace from its token counts.

    ``cost = prompt_tokens * prompt_price / 1000 + completion_tokens * completion_price / 1000``.
    Traces whose backend didn't report usage keep zero tokens and ``usage_missing``.

    :param trace: Trace.
    :type trace: PipelineTrace
    :param price_per_1k_prompt_tokens: Price of 1000 prompt tokens.
    :type price_per_1k_prompt_tokens: float
    :param price_per_1k_completion_tokens: Price of 1000 completion tokens.
    :type price_per_1k_completion_tokens: float
    :return: Cost report.
    :rtype: CostReport
    """
    usage = trace.accounting
    cost = (
        usage.planner_prompt_tokens * price_per_1k_prompt_tokens / 1000
        + usage.planner_completion_tokens * price_per_1k_completion_tokens / 1000
    )

    return CostReport(
        planner_prompt_tokens=usage.planner_prompt_tokens,
        planner_completion_tokens=usage.planner_completion_tokens,
        generation_seconds=usage.generation_seconds,
        planning_seconds=usage.planning_seconds,
        editing_seconds=usage.editing_seconds,
        estimated_planning_cost=cost,
        usage_missing=usage.usage_missing,
        planner_retries=usage.planner_retries,
    )


__all__ = ["DEFAULT_MAX_EDIT_STEPS", "RunConfig", "run_grape", "run_base", "score_trace", "account"]
