"""
graperun.model.types
####################

Domain types shared by every other submodule.

.. autosummary::
    :toctree: generated/

    content_id
    sniff_media_type
    Benchmark
    ImageKind
    Producer
    PlanSource
    TraceStatus
    PromptRecord
    ImageRef
    EditInstruction
    EditPlan
    Element
    PlannerReport
    CostReport
    PipelineTrace

All types are frozen dataclasses, so they can be shared between worker threads freely.
Image payloads never live in these objects: an :class:`ImageRef` only carries the content id and
the location of the payload in an :class:`ArtifactStore <graperun.model.store.ArtifactStore>`.
"""

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Optional

from ..core import PreconditionError
from ..eval.graph import QuestionGraph, questions_from_records
from ..eval.scores import ScoreReport
from ..log import logger

if TYPE_CHECKING:
    from ..simworld.ops import EditOp

SCENE_MEDIA_TYPE = "text/x-graperun-scene"

CONCEPTMIX_K = (1, 3, 5, 7)


def content_id(payload: bytes) -> str:
    """
    Content id of a payload: the hex-encoded SHA-256 digest of its bytes.

    >>> content_id(b"")
    'e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855'

    :param payload: Bytes, may be empty.
    :type payload: bytes
    :return: 64 hex characters.
    :rtype: str
    """
    return hashlib.sha256(payload).hexdigest()


def sniff_media_type(payload: bytes) -> str:
    """
    Guess the media type of a raster image from its magic bytes.

    :param payload: Image bytes.
    :type payload: bytes
    :return: Media type, ``application/octet-stream`` if unknown.
    :rtype: str
    """
    if payload.startswith(b"\x89PNG\r\n\x1a\n"):
        return "image/png"
    if payload.startswith(b"\xff\xd8\xff"):
        return "image/jpeg"
    if payload[:4] == b"RIFF" and payload[8:12] == b"WEBP":
        return "image/webp"
    if payload[:6] in (b"GIF87a", b"GIF89a"):
        return "image/gif"
    return "application/octet-stream"


class Benchmark(str, Enum):
    """
    Benchmark a prompt comes from.
    """

    T2I_COMPBENCH = "t2i-compbench"
    CONCEPTMIX = "conceptmix"
    FLICKR = "flickr"
    CUSTOM = "custom"


class ImageKind(str, Enum):
    """
    ``RASTER`` payloads are encoded images, ``SCENE`` payloads are serialized simworld scenes.
    """

    RASTER = "raster"
    SCENE = "scene"


class Producer(str, Enum):
    """
    Who produced an image.
    """

    GENERATOR = "generator"
    EDITOR = "editor"
    EXTERNAL = "external"


class PlanSource(str, Enum):
    """
    Who produced an edit plan.
    """

    MLLM = "mllm"
    NAIVE_MLLM = "naive-mllm"
    ORACLE = "oracle"


class TraceStatus(str, Enum):
    """
    Terminal state of a pipeline run.
    """

    COMPLETE = "complete"
    PARTIAL = "partial"
    PLAN_FAILED = "plan-failed"


@dataclass(frozen=True)
class PromptRecord:
    """
    A benchmark prompt and the questions used to score images generated from it.
    """

    id: str
    text: str
    benchmark: Benchmark = Benchmark.CUSTOM
    k: Optional[int] = None
    questions: QuestionGraph = field(default_factory=QuestionGraph)

    def __post_init__(self):
        if self.id == "" or self.text.strip() == "":
            logger.error(f"Prompt record needs a nonempty id and text: id='{self.id}'")
            raise PreconditionError(f"Prompt record needs a nonempty id and text: id='{self.id}'")

        if self.k is not None and self.k < 1:
            logger.error(f"Concept count K of prompt '{self.id}' should be at least 1, got {self.k}")
            raise PreconditionError(f"Concept count K of prompt '{self.id}' should be at least 1, got {self.k}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "benchmark": self.benchmark.value,
            "k": self.k,
            "questions": self.questions.to_records(),
        }

    @classmethod
    def from_dict(cls, value: dict) -> "PromptRecord":
        questions = value.get("questions", [])
        if isinstance(questions, str):
            logger.error("Question file paths must be resolved before building a PromptRecord.")
            raise PreconditionError("Question file paths must be resolved before building a PromptRecord.")

        return cls(
            id=str(value["id"]),
            text=value["text"],
            benchmark=Benchmark(value.get("benchmark", "custom")),
            k=value.get("k"),
            questions=questions_from_records(questions),
        )


@dataclass(frozen=True)
class ImageRef:
    """
    Handle of an image payload in the artifact store.

    ``step_index`` is 0 for generated and external images, and counts edits otherwise.
    """

    content_id: str
    kind: ImageKind
    locator: str
    producer: Producer
    step_index: int = 0
    media_type: str = "application/octet-stream"

    def __post_init__(self):
        first_image = self.producer in (Producer.GENERATOR, Producer.EXTERNAL)
        if self.step_index < 0 or first_image != (self.step_index == 0):
            logger.error(f"Invalid step index {self.step_index} for an image produced by {self.producer.value}")
            raise PreconditionError(f"Invalid step index {self.step_index} for an image produced by {self.producer.value}")

    def to_dict(self) -> dict:
        return {
            "content_id": self.content_id,
            "kind": self.kind.value,
            "locator": self.locator,
            "producer": self.producer.value,
            "step_index": self.step_index,
            "media_type": self.media_type,
        }

    @classmethod
    def from_dict(cls, value: dict) -> "ImageRef":
        return cls(
            content_id=value["content_id"],
            kind=ImageKind(value["kind"]),
            locator=value["locator"],
            producer=Producer(value["producer"]),
            step_index=value["step_index"],
            media_type=value.get("media_type", "application/octet-stream"),
        )


@dataclass(frozen=True)
class EditInstruction:
    """
    One step of an edit plan. ``parsed_op`` is only set when the simworld instruction grammar parses ``text``,
    and isn't persisted in manifests.
    """

    ordinal: int
    text: str
    parsed_op: Optional["EditOp"] = field(default=None, compare=False)

    def __post_init__(self):
        if self.ordinal < 1 or self.text.strip() == "":
            logger.error(f"Edit instruction needs ordinal >= 1 and nonempty text, got ({self.ordinal}, '{self.text}')")
            raise PreconditionError(f"Edit instruction needs ordinal >= 1 and nonempty text, got ({self.ordinal}, '{self.text}')")


@dataclass(frozen=True)
class EditPlan:
    """
    Ordered edit instructions. An empty plan means the image was judged aligned with the prompt.
    """

    steps: tuple[EditInstruction, ...] = ()
    source: PlanSource = PlanSource.MLLM

    def __post_init__(self):
        ordinals = [_step.ordinal for _step in self.steps]
        if ordinals != list(range(1, len(self.steps) + 1)):
            logger.error(f"Edit plan ordinals should be 1..n, got {ordinals}")
            raise PreconditionError(f"Edit plan ordinals should be 1..n, got {ordinals}")

    def __len__(self) -> int:
        return len(self.steps)

    @classmethod
    def from_texts(cls, texts: list[str], source: PlanSource, parsed_ops: Optional[list] = None) -> "EditPlan":
        """
        Number instruction texts 1..n.

        :param texts: Instruction texts in order.
        :type texts: list
        :param source: Plan source.
        :type source: PlanSource
        :param parsed_ops: Optional parsed operations, same length as ``texts``.
        :type parsed_ops: list | None
        :return: Plan.
        :rtype: EditPlan
        """
        ops = parsed_ops if parsed_ops is not None else [None] * len(texts)
        return cls(
            steps=tuple(EditInstruction(_index, _text, _op) for _index, (_text, _op) in enumerate(zip(texts, ops), start=1)),
            source=source,
        )

    @property
    def texts(self) -> list[str]:
        return [_step.text for _step in self.steps]

    def to_dict(self) -> dict:
        return {"source": self.source.value, "steps": self.texts}

    @classmethod
    def from_dict(cls, value: dict) -> "EditPlan":
        return cls.from_texts(value["steps"], PlanSource(value["source"]))


@dataclass(frozen=True)
class Element:
    """
    One entity listed by the planner, with its attributes and relations.
    """

    entity: str
    attributes: tuple[str, ...] = ()
    relations: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlannerReport:
    """
    Parsed planner output. ``raw_text`` is kept for inspection and doesn't take part in equality.

    ``error_summary`` is stored with every line stripped and blank lines dropped, the form planner output is read in.
    """

    textual_elements: tuple[Element, ...] = ()
    image_elements: tuple[Element, ...] = ()
    error_summary: str = ""
    plan: EditPlan = field(default_factory=EditPlan)
    raw_text: str = field(default="", compare=False)

    def __post_init__(self):
        lines = [_line.strip() for _line in self.error_summary.splitlines()]
        object.__setattr__(self, "error_summary", "\n".join(_line for _line in lines if _line != ""))

    def to_dict(self) -> dict:
        return {
            "textual_elements": [[_e.entity, list(_e.attributes), list(_e.relations)] for _e in self.textual_elements],
            "image_elements": [[_e.entity, list(_e.attributes), list(_e.relations)] for _e in self.image_elements],
            "error_summary": self.error_summary,
            "plan": self.plan.to_dict(),
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_dict(cls, value: dict) -> "PlannerReport":
        def _elements(rows):
            return tuple(Element(_row[0], tuple(_row[1]), tuple(_row[2])) for _row in rows)

        return cls(
            textual_elements=_elements(value["textual_elements"]),
            image_elements=_elements(value["image_elements"]),
            error_summary=value["error_summary"],
            plan=EditPlan.from_dict(value["plan"]),
            raw_text=value.get("raw_text", ""),
        )


@dataclass(frozen=True)
class CostReport:
    """
    Token usage, planning cost and wall-clock time of one run.

    ``estimated_planning_cost`` is computed from token counts and per-1k-token prices by
    :func:`account <graperun.pipeline.account>`.
    """

    planner_prompt_tokens: int = 0
    planner_completion_tokens: int = 0
    generation_seconds: float = 0.0
    planning_seconds: float = 0.0
    editing_seconds: float = 0.0
    estimated_planning_cost: float = 0.0
    usage_missing: bool = False
    planner_retries: int = 0

    def __post_init__(self):
        values = (
            self.planner_prompt_tokens,
            self.planner_completion_tokens,
            self.generation_seconds,
            self.planning_seconds,
            self.editing_seconds,
            self.estimated_planning_cost,
            self.planner_retries,
        )
        if any(_value < 0 for _value in values):
            logger.error(f"Cost report values can't be negative: {self}")
            raise PreconditionError(f"Cost report values can't be negative: {self}")

    def to_dict(self, include_timings: bool = False) -> dict:
        result = {
            "planner_prompt_tokens": self.planner_prompt_tokens,
            "planner_completion_tokens": self.planner_completion_tokens,
            "estimated_planning_cost": self.estimated_planning_cost,
            "usage_missing": self.usage_missing,
            "planner_retries": self.planner_retries,
        }
        if include_timings:
            result.update(self.timings())
        return result

    def timings(self) -> dict:
        return {
            "generation_seconds": self.generation_seconds,
            "planning_seconds": self.planning_seconds,
            "editing_seconds": self.editing_seconds,
        }

    @classmethod
    def from_dict(cls, value: dict, timings: Optional[dict] = None) -> "CostReport":
        timings = timings if timings is not None else {}
        return cls(
            planner_prompt_tokens=value["planner_prompt_tokens"],
            planner_completion_tokens=value["planner_completion_tokens"],
            estimated_planning_cost=value["estimated_planning_cost"],
            usage_missing=value["usage_missing"],
            planner_retries=value.get("planner_retries", 0),
            generation_seconds=timings.get("generation_seconds", 0.0),
            planning_seconds=timings.get("planning_seconds", 0.0),
            editing_seconds=timings.get("editing_seconds", 0.0),
        )


@dataclass(frozen=True)
class PipelineTrace:
    """
    Full record of one pipeline run: every image, the plan and its accounting.

    ``images[0]`` is the generated image and ``images[-1]`` the output image.
    """

    prompt: PromptRecord
    images: tuple[ImageRef, ...]
    plan: EditPlan = field(default_factory=EditPlan)
    executed_steps: int = 0
    truncated: bool = False
    scores: Optional[tuple[ScoreReport, ...]] = None
    accounting: CostReport = field(default_factory=CostReport)
    status: TraceStatus = TraceStatus.COMPLETE
    failure: str = ""
    report: Optional[PlannerReport] = None
    mode: str = "grape"
    seed: int = 0

    def __post_init__(self):
        if len(self.images) != self.executed_steps + 1 or self.executed_steps > len(self.plan):
            logger.error(
                f"Invalid trace of prompt '{self.prompt.id}': {len(self.images)} images, "
                f"{self.executed_steps} executed steps, plan of {len(self.plan)}"
            )
            raise PreconditionError(
                f"Invalid trace of prompt '{self.prompt.id}': {len(self.images)} images, "
                f"{self.executed_steps} executed steps, plan of {len(self.plan)}"
            )

        if self.truncated != (self.executed_steps < len(self.plan)):
            logger.error(f"Trace of prompt '{self.prompt.id}' has an inconsistent truncated flag.")
            raise PreconditionError(f"Trace of prompt '{self.prompt.id}' has an inconsistent truncated flag.")

        if self.scores is not None and len(self.scores) != len(self.images):
            logger.error(f"Trace of prompt '{self.prompt.id}' should have one score report per image.")
            raise PreconditionError(f"Trace of prompt '{self.prompt.id}' should have one score report per image.")

    @property
    def final_image(self) -> ImageRef:
        return self.images[-1]

    def with_scores(self, scores: tuple[ScoreReport, ...]) -> "PipelineTrace":
        return replace(self, scores=scores)

    def with_accounting(self, accounting: CostReport) -> "PipelineTrace":
        return replace(self, accounting=accounting)

    def to_manifest(self) -> dict:
        """
        Convert to a JSON manifest. Wall-clock timings are left out, see :meth:`CostReport.timings`,
        so re-running over a warm cache gives identical bytes.

        :return: JSON object.
        :rtype: dict
        """
        return {
            "prompt": self.prompt.to_dict(),
            "mode": self.mode,
            "seed": self.seed,
            "status": self.status.value,
            "failure": self.failure,
            "images": [_image.to_dict() for _image in self.images],
            "plan": self.plan.to_dict(),
            "executed_steps": self.executed_steps,
            "truncated": self.truncated,
            "scores": None if self.scores is None else [_score.to_dict() for _score in self.scores],
            "accounting": self.accounting.to_dict(),
            "report": None if self.report is None else self.report.to_dict(),
        }

    @classmethod
    def from_manifest(cls, value: dict, timings: Optional[dict] = None) -> "PipelineTrace":
        """
        Read a manifest written by :meth:`to_manifest`.

        :param value: JSON object.
        :type value: dict
        :param timings: Optional timings sidecar.
        :type timings: dict | None
        :return: Trace.
        :rtype: PipelineTrace
        """
        scores = value.get("scores")
        report = value.get("report")
        return cls(
            prompt=PromptRecord.from_dict(value["prompt"]),
            images=tuple(ImageRef.from_dict(_image) for _image in value["images"]),
            plan=EditPlan.from_dict(value["plan"]),
            executed_steps=value["executed_steps"],
            truncated=value["truncated"],
            scores=None if scores is None else tuple(ScoreReport.from_dict(_score) for _score in scores),
            accounting=CostReport.from_dict(value["accounting"], timings),
            status=TraceStatus(value["status"]),
            failure=value.get("failure", ""),
            report=None if report is None else PlannerReport.from_dict(report),
            mode=value.get("mode", "grape"),
            seed=value.get("seed", 0),
        )


__all__ = [
    "SCENE_MEDIA_TYPE",
    "CONCEPTMIX_K",
    "content_id",
    "sniff_media_type",
    "Benchmark",
    "ImageKind",
    "Producer",
    "PlanSource",
    "TraceStatus",
    "PromptRecord",
    "ImageRef",
    "EditInstruction",
    "EditPlan",
    "Element",
    "PlannerReport",
    "CostReport",
    "PipelineTrace",
]
