"""
graperun.simworld.backends
##########################

.. autosummary::
    :toctree: generated/

    SimGenerator
    RuleEditor
    SimPlannerBackend
    NoisyPlanner
    PredicateVQA
    scene_elements

Backends working on scenes instead of pixels:

* :class:`SimGenerator` parses the prompt into its target scene and degrades it.
* :class:`RuleEditor` parses an instruction and applies it.
* :class:`SimPlannerBackend` answers planner requests with the oracle plan, formatted like a multimodal model would,
  and scorer requests with the overlap of the two element lists.
* :class:`PredicateVQA` evaluates question predicates.
"""

import random
import re
import threading
from base64 import b64decode
from collections import Counter
from typing import Optional

from ..backends.base import ChatRequest, ChatResponse, ChatVisionBackend, EditorBackend, GeneratorBackend, VQABackend
from ..core import (
    InstructionRejectedError,
    InstructionUnparseableError,
    OracleUnanswerableError,
    PlannerParseError,
    PreconditionError,
    TargetNotFoundError,
)
from ..eval import Answer, Question
from ..log import logger
from ..model import ArtifactStore, EditInstruction, EditPlan, Element, ImageKind, ImageRef, PlannerReport, Producer
from ..planner.parse import parse_element_sections, parse_planner_output, render_planner_report
from ..utils import derive_seed
from .generate import evaluate_predicate
from .grammar import parse_edit_instruction, parse_target_scene
from .noise import Fault, degrade_with_faults
from .ops import apply_edit
from .oracle import oracle_plan
from .scene import Scene, deserialize_scene, serialize_scene

_PROMPT_RE = re.compile(r"Text prompt:\s*(?P<prompt>.+)")

# a system prompt asking for the element analysis contains this section name
STRUCTURED_MARKER = "Analyzing Image Elements"


def _scene_of(image: ImageRef, store: ArtifactStore) -> Scene:
    if image.kind is not ImageKind.SCENE:
        logger.error(f"Simulated backends only read scene images, got a {image.kind.value} image.")
        raise PreconditionError(f"Simulated backends only read scene images, got a {image.kind.value} image.")
    return deserialize_scene(store.get(image))


class SimGenerator(GeneratorBackend):
    """
    Draw the target scene of a prompt, with seeded faults.
    """

    def __init__(self, error_rate: float = 0.0, seed: int = 0):
        """
        :param error_rate: Fault probability per object.
        :type error_rate: float
        :param seed: Default seed.
        :type seed: int
        """
        self.error_rate = error_rate
        self.seed = seed
        self.calls = 0
        self._lock = threading.Lock()

    def degraded_scene(self, prompt_text: str, seed: Optional[int] = None) -> tuple[Scene, list[Fault]]:
        """
        The scene :meth:`generate` draws for a prompt, and the faults injected into it.

        :param prompt_text: Prompt in the target grammar.
        :type prompt_text: str
        :param seed: Seed, defaults to the configured one.
        :type seed: int | None
        :return: ``(scene, faults)``.
        :rtype: tuple
        """
        target = parse_target_scene(prompt_text)
        seed = self.seed if seed is None else seed
        return degrade_with_faults(target, self.error_rate, derive_seed("simworld-generate", prompt_text, seed))

    def generate(self, prompt_text: str, store: ArtifactStore, seed: Optional[int] = None) -> ImageRef:
        self.check_prompt(prompt_text)
        with self._lock:
            self.calls += 1

        scene, faults = self.degraded_scene(prompt_text, seed)
        if len(faults) > 0:
            logger.debug(f"Generated scene with {len(faults)} faults")
        return store.put(serialize_scene(scene), ImageKind.SCENE, Producer.GENERATOR, 0)


class RuleEditor(EditorBackend):
    """
    Apply instructions of the edit grammar to scenes.
    """

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def edit(self, image: ImageRef, instruction: EditInstruction, store: ArtifactStore) -> ImageRef:
        with self._lock:
            self.calls += 1

        scene = _scene_of(image, store)
        try:
            edited = apply_edit(scene, parse_edit_instruction(instruction.text))
        except (InstructionUnparseableError, TargetNotFoundError, PreconditionError) as e:
            logger.error(f"Can't apply instruction '{instruction.text}': {e}")
            raise InstructionRejectedError(f"Can't apply instruction '{instruction.text}': {e}")

        return store.put(serialize_scene(edited), ImageKind.SCENE, Producer.EDITOR, image.step_index + 1)


def scene_elements(scene: Scene) -> tuple[Element, ...]:
    """
    Describe the objects of a scene the way the planner lists elements.

    :param scene: Scene.
    :type scene: Scene
    :return: One element per object, in list order.
    :rtype: tuple
    """
    elements = []
    for _object in scene.objects:
        attributes = tuple(f"{_value} {_key}" for _key, _value in _object.attributes)
        relations = tuple(
            f"{_relation.predicate} the {scene.get(_relation.object).noun}" for _relation in scene.relations_of(_object.id)
        )
        elements.append(Element(_object.noun, attributes, relations))
    return tuple(elements)


def _word_count(text: str) -> int:
    return len(text.split())


class SimPlannerBackend(ChatVisionBackend):
    """
    Chat backend answering planner and scorer requests about scene images.

    A request with an image is a planner request: the prompt is read from the ``Text prompt:`` line of the last user
    message with an image. Requests without images are scorer requests.
    Token counts are word counts.
    """

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def chat(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls += 1

        with_images = [_m for _m in request.messages if _m.role == "user" and len(_m.images) > 0]
        reply = self._plan_reply(request, with_images[-1]) if len(with_images) > 0 else self._score_reply(request)

        prompt_words = sum(_word_count(_m.text_content) for _m in request.messages)
        return ChatResponse(reply, prompt_tokens=prompt_words, completion_tokens=_word_count(reply))

    @staticmethod
    def _plan_reply(request: ChatRequest, message) -> str:
        found = _PROMPT_RE.search(message.text_content)
        if found is None:
            logger.error("Planner request has no 'Text prompt:' line.")
            raise PreconditionError("Planner request has no 'Text prompt:' line.")

        image = message.images[0]
        target = parse_target_scene(found.group("prompt").strip())
        current = deserialize_scene(b64decode(image.data_b64))
        plan = oracle_plan(target, current)

        report = PlannerReport(
            textual_elements=scene_elements(target),
            image_elements=scene_elements(current),
            error_summary=(
                "The image matches the prompt." if len(plan) == 0 else f"The image differs from the prompt in {len(plan)} places."
            ),
            plan=plan,
        )
        return render_planner_report(report, naive=STRUCTURED_MARKER not in request.system_text)

    @staticmethod
    def _score_reply(request: ChatRequest) -> str:
        textual, image = parse_element_sections(request.last_user.text_content)
        first = Counter(textual)
        second = Counter(image)
        union = sum((first | second).values())
        overlap = sum((first & second).values())
        score = 100 if union == 0 else round(100 * overlap / union)
        return f"Score: {score}"


class NoisyPlanner(ChatVisionBackend):
    """
    Wrap a planner backend and drop or garble instructions of its plans, deterministically per reply.
    """

    GARBLED = "Make the picture look better"

    def __init__(self, backend: ChatVisionBackend, drop_rate: float = 0.0, corrupt_rate: float = 0.0, seed: int = 0):
        """
        :param backend: Wrapped backend.
        :type backend: ChatVisionBackend
        :param drop_rate: Probability of dropping an instruction.
        :type drop_rate: float
        :param corrupt_rate: Probability of replacing an instruction by one the editor can't apply.
        :type corrupt_rate: float
        :param seed: Random seed.
        :type seed: int
        """
        if drop_rate < 0 or corrupt_rate < 0 or drop_rate + corrupt_rate > 1:
            logger.error(f"Invalid noise rates: drop {drop_rate}, corrupt {corrupt_rate}")
            raise PreconditionError(f"Invalid noise rates: drop {drop_rate}, corrupt {corrupt_rate}")

        self.backend = backend
        self.drop_rate = drop_rate
        self.corrupt_rate = corrupt_rate
        self.seed = seed

    def chat(self, request: ChatRequest) -> ChatResponse:
        response = self.backend.chat(request)
        if not any(len(_m.images) > 0 for _m in request.messages):
            return response

        naive = STRUCTURED_MARKER not in request.system_text
        try:
            report = parse_planner_output(response.text, "naive" if naive else "structured")
        except PlannerParseError:
            return response

        rng = random.Random(derive_seed("noisy-planner", response.text, self.seed))
        texts = []
        for _text in report.plan.texts:
            draw = rng.random()
            if draw < self.drop_rate:
                continue
            texts.append(self.GARBLED if draw < self.drop_rate + self.corrupt_rate else _text)

        noisy = PlannerReport(
            report.textual_elements,
            report.image_elements,
            report.error_summary,
            EditPlan.from_texts(texts, report.plan.source),
        )
        text = render_planner_report(noisy, naive=naive)
        return ChatResponse(text, response.prompt_tokens, _word_count(text), response.usage_missing)


class PredicateVQA(VQABackend):
    """
    Answer questions by evaluating their predicates over scene images.
    """

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def answer_binary(self, image: ImageRef, question: Question, store: ArtifactStore) -> Answer:
        with self._lock:
            self.calls += 1

        if image.kind is not ImageKind.SCENE:
            logger.error(f"Can't evaluate question '{question.id}' on a {image.kind.value} image.")
            raise OracleUnanswerableError(f"Can't evaluate question '{question.id}' on a {image.kind.value} image.")

        return evaluate_predicate(deserialize_scene(store.get(image)), question)


__all__ = [
    "STRUCTURED_MARKER",
    "SimGenerator",
    "RuleEditor",
    "SimPlannerBackend",
    "NoisyPlanner",
    "PredicateVQA",
    "scene_elements",
]
