"""
graperun.planner.core
#####################

.. autosummary::
    :toctree: generated/

    assemble_planner_request
    Planner
    alignment_score
    generate_questions

Planner
*******

The planner looks at the generated image and the text prompt and writes an edit plan. In ``structured`` mode
it is asked to list the elements of the prompt and of the image, name the errors, and then give the plan.
In ``naive`` mode it writes the plan directly.

.. code-block:: Python

    prompts = load_planner_prompts(config.get_prompts_path())
    examples = load_few_shot_examples(config.get_prompts_path(), store)
    planner = Planner(chat_backend, prompts, store, examples)
    report, usage = planner.plan(prompt_record, image)
"""

import re
from dataclasses import replace
from json import JSONDecodeError, loads
from typing import Optional, Sequence

from ..backends.base import ChatMessage, ChatRequest, ChatVisionBackend, TextPart, image_part
from ..core import (
    InstructionUnparseableError,
    PlanFailureError,
    PlannerParseError,
    PreconditionError,
    QuestionGraphError,
    ScoreUnavailableError,
)
from ..eval import QuestionGraph, questions_from_records
from ..log import logger
from ..model import ArtifactStore, CostReport, EditInstruction, EditPlan, ImageRef, PlannerReport, PromptRecord
from ..simworld.grammar import parse_edit_instruction
from .parse import parse_planner_output, render_element_sections, render_planner_report
from .prompts import FewShotExample, PlannerPrompts

PLANNER_ATTEMPTS = 3

QUESTION_GENERATION_PROMPT = (
    "Decompose the text prompt into atomic binary questions about entities, attributes and relations. "
    "Write one JSON object per line with the keys id, text and parents, where parents lists the ids of "
    "questions that must be answered yes for the question to make sense. Write nothing else."
)

_INTEGER_RE = re.compile(r"-?\d+")


def assemble_planner_request(
    prompt: PromptRecord,
    image: ImageRef,
    examples: Sequence[FewShotExample],
    mode: str,
    prompts: PlannerPrompts,
    store: ArtifactStore,
    temperature: float = 0.0,
    seed: int = 0,
) -> ChatRequest:
    """
    Build the chat request asking for an edit plan.

    Messages: the system prompt of ``mode``, one user/assistant pair per few-shot example, and the user message
    with the prompt and the image. In naive mode the example answers only keep their plans.

    :param prompt: Prompt record.
    :type prompt: PromptRecord
    :param image: Image generated from the prompt.
    :type image: ImageRef
    :param examples: Few-shot examples, required in structured mode.
    :type examples: Sequence[FewShotExample]
    :param mode: ``"structured"`` or ``"naive"``.
    :type mode: str
    :param prompts: Prompt texts.
    :type prompts: PlannerPrompts
    :param store: Store holding the images.
    :type store: ArtifactStore
    :param temperature: Sampling temperature.
    :type temperature: float
    :param seed: Sampling seed.
    :type seed: int
    :return: Chat request.
    :rtype: ChatRequest
    """
    if mode not in ("structured", "naive"):
        logger.error(f"Unknown planner mode '{mode}'")
        raise PreconditionError(f"Unknown planner mode '{mode}'")

    if mode == "structured" and len(examples) == 0:
        logger.error("Structured planner mode needs few-shot examples.")
        raise PreconditionError("Structured planner mode needs few-shot examples.")

    messages = [ChatMessage.text("system", prompts.system_prompt(mode))]

    for _example in examples:
        answer = _example.expected_report_text
        if mode == "naive":
            answer = render_planner_report(parse_planner_output(answer), naive=True)

        messages.append(
            ChatMessage(
                "user", (TextPart(prompts.user_planner.format(prompt=_example.prompt_text)), image_part(_example.image, store))
            )
        )
        messages.append(ChatMessage.text("assistant", answer))

    messages.append(ChatMessage("user", (TextPart(prompts.user_planner.format(prompt=prompt.text)), image_part(image, store))))

    return ChatRequest(tuple(messages), temperature=temperature, seed=seed)


def _with_parsed_ops(plan: EditPlan) -> EditPlan:
    steps = []
    for _step in plan.steps:
        try:
            op = parse_edit_instruction(_step.text)
        except InstructionUnparseableError:
            op = None
        steps.append(EditInstruction(_step.ordinal, _step.text, op))

    return EditPlan(tuple(steps), plan.source)


class Planner:
    """
    Ask a chat-vision backend for edit plans.
    """

    def __init__(
        self,
        backend: ChatVisionBackend,
        prompts: PlannerPrompts,
        store: ArtifactStore,
        examples: Sequence[FewShotExample] = (),
        mode: str = "structured",
        attempts: int = PLANNER_ATTEMPTS,
        temperature: float = 0.0,
        seed: int = 0,
    ):
        """
        :param backend: Chat backend.
        :type backend: ChatVisionBackend
        :param prompts: Prompt texts.
        :type prompts: PlannerPrompts
        :param store: Artifact store.
        :type store: ArtifactStore
        :param examples: Few-shot examples.
        :type examples: Sequence[FewShotExample]
        :param mode: ``"structured"`` or ``"naive"``.
        :type mode: str
        :param attempts: Requests before an unparseable output becomes a plan failure.
        :type attempts: int
        :param temperature: Sampling temperature.
        :type temperature: float
        :param seed: Sampling seed.
        :type seed: int
        """
        self.backend = backend
        self.prompts = prompts
        self.store = store
        self.examples = tuple(examples)
        self.mode = mode
        self.attempts = max(1, attempts)
        self.temperature = temperature
        self.seed = seed

    def with_mode(self, mode: str) -> "Planner":
        return Planner(self.backend, self.prompts, self.store, self.examples, mode, self.attempts, self.temperature, self.seed)

    def plan(self, prompt: PromptRecord, image: ImageRef) -> tuple[PlannerReport, CostReport]:
        """
        Get an edit plan for an image.

        An output which can't be parsed is sent back with the parse error as a hint, at most ``attempts`` requests
        in total. Transport errors are retried by the backend and propagate from here.

        :param prompt: Prompt record.
        :type prompt: PromptRecord
        :param image: Image to plan edits for.
        :type image: ImageRef
        :return: Report and token usage, ``planner_retries`` counts the extra requests.
        :rtype: tuple
        """
        request = assemble_planner_request(
            prompt, image, self.examples, self.mode, self.prompts, self.store, self.temperature, self.seed
        )

        prompt_tokens = completion_tokens = 0
        usage_missing = False
        errors = []

        for _attempt in range(self.attempts):
            response = self.backend.chat(request)
            prompt_tokens += response.prompt_tokens
            completion_tokens += response.completion_tokens
            usage_missing = usage_missing or response.usage_missing

            try:
                report = parse_planner_output(response.text, self.mode)
            except PlannerParseError as e:
                errors.append(str(e))
                logger.warning(f"Planner output for '{prompt.id}' can't be parsed (attempt {_attempt + 1}): {e}")
                hint = (
                    f"Your answer couldn't be read: {e}. "
                    "Answer again and end with a 'Feedback' section listing numbered edit instructions."
                )
                request = ChatRequest(
                    request.messages + (ChatMessage.text("assistant", response.text), ChatMessage.text("user", hint)),
                    temperature=request.temperature,
                    seed=request.seed,
                )
                continue

            usage = CostReport(
                planner_prompt_tokens=prompt_tokens,
                planner_completion_tokens=completion_tokens,
                usage_missing=usage_missing,
                planner_retries=_attempt,
            )
            return replace(report, plan=_with_parsed_ops(report.plan)), usage

        logger.error(f"No parseable plan for '{prompt.id}' after {self.attempts} attempts: {errors[-1]}")
        raise PlanFailureError(f"No parseable plan for '{prompt.id}' after {self.attempts} attempts: {errors[-1]}", self.attempts)


def alignment_score(
    report: PlannerReport, backend: ChatVisionBackend, prompts: PlannerPrompts, attempts: int = PLANNER_ATTEMPTS
) -> int:
    """
    Ask a chat backend to rate, from 1 to 100, how well the image elements of a report match its textual elements.
    Only the two element sections are sent, never the plan.

    :param report: Planner report with both element sections.
    :type report: PlannerReport
    :param backend: Chat backend.
    :type backend: ChatVisionBackend
    :param prompts: Prompt texts, ``system_scoring`` is used.
    :type prompts: PlannerPrompts
    :param attempts: Requests before giving up.
    :type attempts: int
    :return: Score in ``[1, 100]``.
    :rtype: int
    """
    if len(report.textual_elements) == 0 or len(report.image_elements) == 0:
        logger.error("Alignment score needs both textual and image elements.")
        raise PreconditionError("Alignment score needs both textual and image elements.")

    messages = (ChatMessage.text("system", prompts.system_scoring), ChatMessage.text("user", render_element_sections(report)))
    replies = []

    for _ in range(max(1, attempts)):
        reply = backend.chat(ChatRequest(messages)).text
        found = _INTEGER_RE.search(reply)
        if found is not None:
            return min(100, max(1, int(found.group(0))))

        replies.append(reply)
        messages += (ChatMessage.text("assistant", reply), ChatMessage.text("user", "Reply with a single integer from 1 to 100."))

    logger.error(f"No integer score in replies {replies}")
    raise ScoreUnavailableError(f"No integer score in replies {replies}")


def generate_questions(prompt_text: str, backend: ChatVisionBackend, system_prompt: Optional[str] = None) -> QuestionGraph:
    """
    Ask a chat backend to write the question graph of a prompt.
    The reply goes through the same validation as question files.

    :param prompt_text: Text prompt.
    :type prompt_text: str
    :param backend: Chat backend.
    :type backend: ChatVisionBackend
    :param system_prompt: Instructions, defaults to a built-in prompt asking for JSON lines.
    :type system_prompt: str | None
    :return: Question graph.
    :rtype: QuestionGraph
    """
    request = ChatRequest(
        (
            ChatMessage.text("system", QUESTION_GENERATION_PROMPT if system_prompt is None else system_prompt),
            ChatMessage.text("user", prompt_text),
        )
    )
    reply = backend.chat(request).text

    records = []
    for _line in reply.splitlines():
        line = _line.strip()
        if not line.startswith("{"):
            continue
        try:
            records.append(loads(line))
        except JSONDecodeError as e:
            logger.error(f"Bad question record '{line}': {e}")
            raise QuestionGraphError(f"Bad question record '{line}': {e}")

    if len(records) == 0:
        logger.error(f"No question records in reply: '{reply[:200]}'")
        raise QuestionGraphError(f"No question records in reply: '{reply[:200]}'")

    return questions_from_records(records)


__all__ = ["PLANNER_ATTEMPTS", "assemble_planner_request", "Planner", "alignment_score", "generate_questions"]
