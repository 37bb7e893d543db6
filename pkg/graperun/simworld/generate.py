"""
graperun.simworld.generate
##########################

.. autosummary::
    :toctree: generated/

    random_target
    questions_for_scene
    evaluate_predicate
    generate_prompt_set

Random target scenes in the spirit of compositional benchmarks: every prompt combines ``k`` concepts drawn from
color, texture, shape, size, style, number and spatial relations.

Generated scenes keep two properties the simulated generator relies on:

* Objects of a counted group are identical and have no relations.
* Every noun belongs to one group, so "the <noun>" is never ambiguous in a relation clause.
"""

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..core import SceneGrammarError
from ..eval import Answer, Predicate, Question, QuestionGraph
from ..log import logger
from ..model import Benchmark, PromptRecord
from ..utils import derive_seed
from .grammar import parse_target_scene, render_target_prompt
from .scene import Relation, Scene, SceneObject
from .vocab import ATTRIBUTE_KEYS, CONCEPT_KEYS, COUNT_TO_WORD, NOUNS, PREDICATES, VOCABULARY

MAX_OBJECTS = 8


@dataclass
class _Group:
    noun: str
    attributes: dict[str, str] = field(default_factory=dict)
    count: int = 1
    related: bool = False


def random_target(rng: random.Random, concepts: int) -> Scene:
    """
    Build a random target scene combining ``concepts`` concepts, with at most eight objects.

    :param rng: Random generator.
    :type rng: random.Random
    :param concepts: Number of concepts, at least 1.
    :type concepts: int
    :return: Scene.
    :rtype: Scene
    """
    nouns = sorted(NOUNS)
    rng.shuffle(nouns)

    groups = [_Group(nouns.pop())]
    relations: list[tuple[int, str, int]] = []

    def total() -> int:
        return sum(_group.count for _group in groups)

    def set_attribute(key: str) -> bool:
        candidates = [_group for _group in groups if key not in _group.attributes]
        if len(candidates) == 0:
            if total() >= MAX_OBJECTS:
                return False
            groups.append(_Group(nouns.pop()))
            candidates = [groups[-1]]
        rng.choice(candidates).attributes[key] = rng.choice(VOCABULARY[key])
        return True

    def set_number() -> bool:
        room = MAX_OBJECTS - total()
        singles = [_group for _group in groups if _group.count == 1 and not _group.related]
        if room >= 1 and len(singles) > 0 and rng.random() < 0.5:
            rng.choice(singles).count = rng.randint(2, min(3, room + 1))
            return True
        if room >= 2:
            groups.append(_Group(nouns.pop(), count=rng.randint(2, min(3, room))))
            return True
        return False

    def set_spatial() -> bool:
        singles = [_index for _index, _group in enumerate(groups) if _group.count == 1]
        if total() >= MAX_OBJECTS or len(singles) == 0:
            return False
        anchor = rng.choice(singles)
        groups.append(_Group(nouns.pop(), related=True))
        groups[anchor].related = True
        relations.append((len(groups) - 1, rng.choice(PREDICATES), anchor))
        return True

    for _ in range(concepts):
        category = rng.choice(CONCEPT_KEYS)
        match category:
            case "number":
                done = set_number()
            case "spatial":
                done = set_spatial()
            case _:
                done = set_attribute(category)

        if not done:
            # no room for more objects, put the concept on an attribute instead
            for _key in rng.sample(ATTRIBUTE_KEYS, len(ATTRIBUTE_KEYS)):
                if set_attribute(_key):
                    break
            else:
                logger.debug(f"No room left for concept '{category}'")

    objects: list[SceneObject] = []
    first_ids: list[str] = []
    for _group in groups:
        first_ids.append(f"o{len(objects) + 1}")
        for _ in range(_group.count):
            objects.append(SceneObject(f"o{len(objects) + 1}", _group.noun, tuple(_group.attributes.items())))

    return Scene(
        tuple(objects),
        tuple(Relation(first_ids[_subject], _predicate, first_ids[_object]) for _subject, _predicate, _object in relations),
    )


def _noun_phrase(noun: str, count: int) -> str:
    return noun if count == 1 else NOUNS[noun]


def _attribute_question(noun: str, count: int, key: str, value: str) -> str:
    verb = "Is" if count == 1 else "Are"
    subject = f"the {_noun_phrase(noun, count)}"
    match key:
        case "texture":
            return f"{'Does' if count == 1 else 'Do'} {subject} have {value} texture?"
        case "style":
            return f"{verb} {subject} in {value} style?"
        case _:
            return f"{verb} {subject} {value}?"


def questions_for_scene(scene: Scene) -> QuestionGraph:
    """
    Binary questions checking a scene, with structured predicates.

    Every noun gets an existence question, exact in number when the scene has several instances.
    Attribute questions depend on the existence question of their noun, relation questions on both nouns.

    :param scene: Target scene.
    :type scene: Scene
    :return: Question graph, ids ``q1``, ``q2``...
    :rtype: QuestionGraph
    """
    counts = Counter(_object.noun for _object in scene.objects)
    questions: list[Question] = []
    exists_ids: dict[str, str] = {}

    def new_id() -> str:
        return f"q{len(questions) + 1}"

    for _noun in counts:
        count = counts[_noun]
        if count == 1:
            text = f"Is there {'an' if _noun[0] in 'aeiou' else 'a'} {_noun}?"
        else:
            text = f"Are there {COUNT_TO_WORD.get(count, str(count))} {NOUNS[_noun]}?"

        exists_ids[_noun] = new_id()
        questions.append(Question(new_id(), text, (), Predicate("exists", _noun, count=count if count > 1 else None)))

        attributes = sorted({_pair for _object in scene.objects if _object.noun == _noun for _pair in _object.attributes})
        for _key, _value in attributes:
            questions.append(
                Question(
                    new_id(),
                    _attribute_question(_noun, count, _key, _value),
                    (exists_ids[_noun],),
                    Predicate("attribute", _noun, key=_key, value=_value),
                )
            )

    for _relation in scene.relations:
        subject = scene.get(_relation.subject).noun
        other = scene.get(_relation.object).noun
        parents = tuple(dict.fromkeys((exists_ids[subject], exists_ids[other])))
        questions.append(
            Question(
                new_id(),
                f"Is the {subject} {_relation.predicate} the {other}?",
                parents,
                Predicate("relation", subject, predicate=_relation.predicate, object=other),
            )
        )

    return QuestionGraph(tuple(questions))


def evaluate_predicate(scene: Scene, question: Question) -> Answer:
    """
    Answer a question by checking its predicate against a scene.

    :param scene: Scene.
    :type scene: Scene
    :param question: Question with a structured predicate.
    :type question: Question
    :return: Answer.
    :rtype: Answer
    """
    predicate = question.require_predicate()
    instances = [_object for _object in scene.objects if _object.noun == predicate.noun]

    match predicate.type:
        case "exists":
            holds = len(instances) == predicate.count if predicate.count is not None else len(instances) > 0

        case "attribute":
            holds = any(_object.attrs.get(predicate.key) == predicate.value for _object in instances)  # type: ignore

        case "relation":
            holds = False
            for _subject in instances:
                for _relation in scene.relations_of(_subject.id):
                    if _relation.predicate == predicate.predicate and scene.get(_relation.object).noun == predicate.object:
                        holds = True

        case _:
            holds = False

    return Answer.coerce(holds)


def generate_prompt_set(count: int, k: int, seed: int = 0, benchmark: Benchmark = Benchmark.CUSTOM) -> list[PromptRecord]:
    """
    Generate simworld prompts with their question graphs.

    :param count: Number of prompts.
    :type count: int
    :param k: Concepts per prompt.
    :type k: int
    :param seed: Random seed.
    :type seed: int
    :param benchmark: Benchmark recorded on the prompts.
    :type benchmark: Benchmark
    :return: Prompt records with ids ``sim-k<k>-<index>``.
    :rtype: list
    """
    records = []
    for _index in range(count):
        rng = random.Random(derive_seed("simworld-prompt", k, seed, _index))
        scene = random_target(rng, k)
        records.append(
            PromptRecord(
                id=f"sim-k{k}-{_index:04d}",
                text=render_target_prompt(scene),
                benchmark=benchmark,
                k=k,
                questions=questions_for_scene(scene),
            )
        )

    return records


def target_of(record: PromptRecord) -> Optional[Scene]:
    """
    Parse the target scene of a prompt, ``None`` if the prompt isn't in the simworld grammar.
    """
    try:
        return parse_target_scene(record.text)
    except SceneGrammarError:
        return None


__all__ = ["MAX_OBJECTS", "random_target", "questions_for_scene", "evaluate_predicate", "generate_prompt_set", "target_of"]
