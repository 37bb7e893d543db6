"""
graperun.eval.graph
###################

Binary question graphs used to score images.

.. autosummary::
    :toctree: generated/

    Predicate
    Question
    QuestionGraph
    questions_from_records
    load_question_graph

Every question may depend on parent questions: "Is the duck metallic?" only makes sense if
"Is there a duck?" is answered yes. The parent relation must form a DAG, which is checked when
a :class:`QuestionGraph` is built.
"""

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from json import JSONDecodeError, loads
from os.path import exists
from typing import Iterator, List, Optional, Sequence

from ..core import OracleUnanswerableError, PredicateDict, QuestionDict, QuestionGraphError
from ..log import logger

PREDICATE_TYPES = ("exists", "attribute", "relation")


@dataclass(frozen=True)
class Predicate:
    """
    Structured form of a question, which the simulated VQA evaluates over a scene.

    ``type`` decides which fields are used:

    * ``exists``: ``noun``, optionally ``count`` for an exact number of instances.
    * ``attribute``: ``noun``, ``key`` and ``value``.
    * ``relation``: ``noun``, ``predicate`` and ``object``.
    """

    type: str
    noun: str
    count: Optional[int] = None
    key: Optional[str] = None
    value: Optional[str] = None
    predicate: Optional[str] = None
    object: Optional[str] = None

    def __post_init__(self):
        if self.type not in PREDICATE_TYPES:
            logger.error(f"Unknown predicate type '{self.type}', valid values: {PREDICATE_TYPES}")
            raise QuestionGraphError(f"Unknown predicate type '{self.type}', valid values: {PREDICATE_TYPES}")

        required = {"exists": (), "attribute": ("key", "value"), "relation": ("predicate", "object")}[self.type]
        missing = [_name for _name in required if getattr(self, _name) is None]
        if self.noun == "" or len(missing) > 0:
            logger.error(f"Predicate '{self.type}' misses fields: {['noun'] if self.noun == '' else missing}")
            raise QuestionGraphError(f"Predicate '{self.type}' misses fields: {['noun'] if self.noun == '' else missing}")

    @classmethod
    def from_dict(cls, value: PredicateDict) -> "Predicate":
        """
        Create a predicate from its JSON form.

        :param value: JSON object.
        :type value: dict
        :return: Predicate.
        :rtype: Predicate
        """
        try:
            return cls(
                type=value["type"],
                noun=value["noun"],
                count=value.get("count"),
                key=value.get("key"),
                value=value.get("value"),
                predicate=value.get("predicate"),
                object=value.get("object"),
            )
        except KeyError as e:
            logger.error(f"Predicate misses key {e}: {value}")
            raise QuestionGraphError(f"Predicate misses key {e}: {value}")

    def to_dict(self) -> PredicateDict:
        """
        Convert to the JSON form, omitting unset fields.

        :return: JSON object.
        :rtype: dict
        """
        result = {"type": self.type, "noun": self.noun}
        for _name in ("count", "key", "value", "predicate", "object"):
            if getattr(self, _name) is not None:
                result[_name] = getattr(self, _name)
        return result  # type: ignore


@dataclass(frozen=True)
class Question:
    """
    A binary question about an image.
    """

    id: str
    text: str
    parents: tuple[str, ...] = ()
    predicate: Optional[Predicate] = None

    def require_predicate(self) -> Predicate:
        """
        Get the structured predicate, which the simulated VQA needs.

        :return: Predicate.
        :rtype: Predicate
        """
        if self.predicate is None:
            logger.error(f"Question '{self.id}' carries no structured predicate: '{self.text}'")
            raise OracleUnanswerableError(f"Question '{self.id}' carries no structured predicate: '{self.text}'")
        return self.predicate

    @classmethod
    def from_dict(cls, value: QuestionDict) -> "Question":
        """
        Create a question from one line of a question file.

        :param value: JSON object.
        :type value: dict
        :return: Question.
        :rtype: Question
        """
        if "id" not in value or "text" not in value:
            logger.error(f"Question record needs 'id' and 'text': {value}")
            raise QuestionGraphError(f"Question record needs 'id' and 'text': {value}")

        predicate = value.get("predicate")
        return cls(
            id=str(value["id"]),
            text=value["text"],
            parents=tuple(str(_parent) for _parent in value.get("parents", [])),
            predicate=None if predicate is None else Predicate.from_dict(predicate),
        )

    def to_dict(self) -> QuestionDict:
        """
        Convert to one line of a question file.

        :return: JSON object.
        :rtype: dict
        """
        return {
            "id": self.id,
            "text": self.text,
            "parents": list(self.parents),
            "predicate": None if self.predicate is None else self.predicate.to_dict(),
        }


@dataclass(frozen=True)
class QuestionGraph:
    """
    A validated set of questions whose parent relation is a DAG.

    :raises QuestionGraphError: If ids repeat, a parent doesn't exist, or parents form a cycle.
    """

    questions: tuple[Question, ...] = ()
    _order: tuple[str, ...] = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        ids = [_question.id for _question in self.questions]
        if len(set(ids)) != len(ids):
            duplicated = sorted({_id for _id in ids if ids.count(_id) > 1})
            logger.error(f"Duplicated question ids: {duplicated}")
            raise QuestionGraphError(f"Duplicated question ids: {duplicated}")

        id_set = set(ids)
        sorter = TopologicalSorter()
        for _question in self.questions:
            for _parent in _question.parents:
                if _parent not in id_set:
                    logger.error(f"Question '{_question.id}' references unknown parent '{_parent}'")
                    raise QuestionGraphError(f"Question '{_question.id}' references unknown parent '{_parent}'")
            sorter.add(_question.id, *_question.parents)

        try:
            order = tuple(sorter.static_order())
        except CycleError as e:
            cycle = e.args[1]
            logger.error(f"Question graph has a cycle through '{cycle[0]}': {' -> '.join(cycle)}")
            raise QuestionGraphError(f"Question graph has a cycle through '{cycle[0]}': {' -> '.join(cycle)}")

        object.__setattr__(self, "_order", order)

    def __len__(self) -> int:
        return len(self.questions)

    def __iter__(self) -> Iterator[Question]:
        return iter(self.questions)

    @property
    def ids(self) -> List[str]:
        """
        Question ids in list order.
        """
        return [_question.id for _question in self.questions]

    def get(self, question_id: str) -> Question:
        """
        Get a question by id.

        :param question_id: Question id.
        :type question_id: str
        :return: Question.
        :rtype: Question
        """
        for _question in self.questions:
            if _question.id == question_id:
                return _question

        logger.error(f"Unknown question id '{question_id}'")
        raise KeyError(f"Unknown question id '{question_id}'")

    def topological_order(self) -> List[str]:
        """
        Question ids ordered so that parents come before children.

        :return: Ids.
        :rtype: list
        """
        return list(self._order)

    def depth(self) -> int:
        """
        Number of edges on the longest parent chain. A graph without dependencies has depth 0.

        :return: Depth.
        :rtype: int
        """
        by_id = {_question.id: _question for _question in self.questions}
        level: dict[str, int] = {}
        for _id in self._order:
            parents = by_id[_id].parents
            level[_id] = 0 if len(parents) == 0 else 1 + max(level[_parent] for _parent in parents)

        return max(level.values(), default=0)

    def to_records(self) -> List[QuestionDict]:
        """
        Convert to lines of a question file.

        :return: JSON objects.
        :rtype: list
        """
        return [_question.to_dict() for _question in self.questions]


def questions_from_records(records: Sequence[QuestionDict]) -> QuestionGraph:
    """
    Build and validate a question graph from JSON records.

    :param records: Question records.
    :type records: list
    :return: Validated graph.
    :rtype: QuestionGraph
    """
    return QuestionGraph(tuple(Question.from_dict(_record) for _record in records))


def load_question_graph(path: str) -> QuestionGraph:
    """
    Read a JSONL question file, one question per line. Blank lines are skipped.

    :param path: File path.
    :type path: str
    :return: Validated graph.
    :rtype: QuestionGraph
    """
    if not exists(path):
        logger.error(f"Question file '{path}' not found.")
        raise FileNotFoundError(f"Question file '{path}' not found.")

    records = []
    with open(path, "r") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue
            try:
                records.append(loads(line))
            except JSONDecodeError as e:
                logger.error(f"Can't parse line {line_no} of '{path}': {e}")
                raise QuestionGraphError(f"Can't parse line {line_no} of '{path}': {e}")

    return questions_from_records(records)


__all__ = ["Predicate", "Question", "QuestionGraph", "questions_from_records", "load_question_graph", "PREDICATE_TYPES"]
