"""
graperun.eval.scores
####################

Scoring functions over answered question graphs.

.. autosummary::
    :toctree: generated/

    Answer
    ScoreReport
    dsg_scores
    qa_score
    build_score_report
    aggregate
    avg_edit_steps

Two DSG variants are computed from the same answers:

* Without dependency: the fraction of questions answered yes.
* With dependency: a question only counts as yes if it is answered yes *and* all its parents count as yes.
  A "no" for "Is there a duck?" therefore invalidates "Is the duck metallic?".

Questions that couldn't be answered are counted as no.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Sequence, Tuple, Union

import numpy as np

from ..core import ScoreInputError
from ..log import logger
from .graph import QuestionGraph

if TYPE_CHECKING:
    from ..model import PipelineTrace


class Answer(str, Enum):
    """
    Answer of a binary question.
    """

    YES = "yes"
    NO = "no"

    @classmethod
    def coerce(cls, value: Union["Answer", bool, str]) -> "Answer":
        """
        Convert ``True``/``False`` or ``"yes"``/``"no"`` to an answer.

        :param value: Value.
        :return: Answer.
        :rtype: Answer
        """
        if isinstance(value, Answer):
            return value
        if isinstance(value, bool):
            return cls.YES if value else cls.NO
        return cls(str(value).strip().lower())


AnswerLike = Union[Answer, bool, str]


def _normalize_answers(answers: Mapping[str, AnswerLike], graph: QuestionGraph) -> dict[str, Answer]:
    id_set = set(graph.ids)
    unknown = sorted(set(answers) - id_set)
    if len(unknown) > 0:
        logger.error(f"Answers reference unknown question ids: {unknown}")
        raise ScoreInputError(f"Answers reference unknown question ids: {unknown}")

    try:
        return {_id: Answer.coerce(answers[_id]) if _id in answers else Answer.NO for _id in graph.ids}
    except ValueError as e:
        logger.error(f"Invalid answer value: {e}")
        raise ScoreInputError(f"Invalid answer value: {e}")


def validated_answers(answers: Mapping[str, AnswerLike], graph: QuestionGraph) -> dict[str, Answer]:
    """
    Apply the dependency rule: a question stays yes only if every parent stays yes.

    :param answers: Raw answers. Missing ids count as no.
    :type answers: dict
    :param graph: Question graph.
    :type graph: QuestionGraph
    :return: Validated answers of every question.
    :rtype: dict
    """
    raw = _normalize_answers(answers, graph)

    validated: dict[str, Answer] = {}
    for _id in graph.topological_order():
        ok = raw[_id] is Answer.YES and all(validated[_parent] is Answer.YES for _parent in graph.get(_id).parents)
        validated[_id] = Answer.YES if ok else Answer.NO

    return validated


def dsg_scores(answers: Mapping[str, AnswerLike], graph: QuestionGraph) -> Tuple[float, float]:
    """
    Compute DSG with and without dependency.

    >>> dsg, dsg_no_dep = dsg_scores({"q1": "no", "q2": "yes", "q3": "yes"}, graph)

    :param answers: Answers keyed by question id. Missing ids count as no.
    :type answers: dict
    :param graph: Question graph.
    :type graph: QuestionGraph
    :return: ``(dsg, dsg_no_dep)``. ``(0.0, 0.0)`` for an empty graph.
    :rtype: tuple
    """
    raw = _normalize_answers(answers, graph)

    if len(graph) == 0:
        logger.warning("Scoring an empty question graph, score is 0.")
        return 0.0, 0.0

    validated = validated_answers(raw, graph)

    total = len(graph)
    dsg_no_dep = sum(_answer is Answer.YES for _answer in raw.values()) / total
    dsg = sum(_answer is Answer.YES for _answer in validated.values()) / total

    return dsg, dsg_no_dep


def qa_score(answers: Mapping[str, AnswerLike], graph: QuestionGraph, aggregation: str = "per-question") -> float:
    """
    ConceptMix-style QA score of one image, ignoring dependencies.

    :param answers: Answers keyed by question id. Missing ids count as no.
    :type answers: dict
    :param graph: Question graph.
    :type graph: QuestionGraph
    :param aggregation: ``"per-question"`` gives the fraction of yes answers,
                        ``"all-pass"`` gives 1 only if every question is answered yes.
    :type aggregation: str
    :return: Score in ``[0, 1]``.
    :rtype: float
    """
    raw = _normalize_answers(answers, graph)

    if len(graph) == 0:
        logger.warning("Scoring an empty question graph, score is 0.")
        return 0.0

    yes_count = sum(_answer is Answer.YES for _answer in raw.values())

    match aggregation:
        case "per-question":
            return yes_count / len(graph)
        case "all-pass":
            return 1.0 if yes_count == len(graph) else 0.0
        case _:
            logger.error(f"Unknown QA aggregation '{aggregation}'")
            raise ScoreInputError(f"Unknown QA aggregation '{aggregation}'")


@dataclass(frozen=True)
class ScoreReport:
    """
    Scores of one image of a trace.
    """

    step_index: int
    answers: dict[str, Answer] = field(default_factory=dict)
    dsg: float = 0.0
    dsg_no_dep: float = 0.0
    qa: float = 0.0
    unanswered_count: int = 0

    def __post_init__(self):
        if not (0.0 <= self.dsg <= self.dsg_no_dep <= 1.0) or self.unanswered_count < 0:
            logger.error(f"Inconsistent score report: {self}")
            raise ScoreInputError(f"Inconsistent score report: {self}")

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "answers": {_id: _answer.value for _id, _answer in self.answers.items()},
            "dsg": self.dsg,
            "dsg_no_dep": self.dsg_no_dep,
            "qa": self.qa,
            "unanswered_count": self.unanswered_count,
        }

    @classmethod
    def from_dict(cls, value: dict) -> "ScoreReport":
        return cls(
            step_index=value["step_index"],
            answers={_id: Answer(_answer) for _id, _answer in value["answers"].items()},
            dsg=value["dsg"],
            dsg_no_dep=value["dsg_no_dep"],
            qa=value["qa"],
            unanswered_count=value["unanswered_count"],
        )


def build_score_report(
    step_index: int,
    answers: Mapping[str, AnswerLike],
    graph: QuestionGraph,
    unanswered_count: int = 0,
    qa_aggregation: str = "per-question",
) -> ScoreReport:
    """
    Score the answers of one image.

    :param step_index: Step index of the image.
    :type step_index: int
    :param answers: Answers keyed by question id. Missing ids count as no.
    :type answers: dict
    :param graph: Question graph.
    :type graph: QuestionGraph
    :param unanswered_count: How many questions couldn't be answered.
    :type unanswered_count: int
    :param qa_aggregation: See :func:`qa_score`.
    :type qa_aggregation: str
    :return: Report.
    :rtype: ScoreReport
    """
    dsg, dsg_no_dep = dsg_scores(answers, graph)
    return ScoreReport(
        step_index=step_index,
        answers=_normalize_answers(answers, graph),
        dsg=dsg,
        dsg_no_dep=dsg_no_dep,
        qa=qa_score(answers, graph, qa_aggregation),
        unanswered_count=unanswered_count,
    )


def aggregate(per_run_scores: Sequence[Sequence[float]]) -> Tuple[float, float]:
    """
    Aggregate per-prompt scores of several runs (one run per seed).

    The mean over prompts is taken per run first. The result is the mean of those run means,
    and their sample standard deviation. A single run has deviation 0.

    :param per_run_scores: One list of per-prompt scores per run.
    :type per_run_scores: list
    :return: ``(mean, std)``.
    :rtype: tuple
    """
    if len(per_run_scores) == 0 or any(len(_run) == 0 for _run in per_run_scores):
        logger.error("Can't aggregate scores: no runs, or a run without scores.")
        raise ScoreInputError("Can't aggregate scores: no runs, or a run without scores.")

    run_means = np.array([np.mean(np.asarray(_run, dtype=np.float64)) for _run in per_run_scores])

    mean = float(np.mean(run_means))
    std = float(np.std(run_means, ddof=1)) if len(run_means) > 1 else 0.0

    return mean, std


def avg_edit_steps(traces: Sequence["PipelineTrace"]) -> float:
    """
    Average plan length over traces. Plan length counts planned steps, not executed ones.

    :param traces: Traces.
    :type traces: list
    :return: Mean plan length.
    :rtype: float
    """
    if len(traces) == 0:
        logger.error("Can't compute average edit steps of zero traces.")
        raise ScoreInputError("Can't compute average edit steps of zero traces.")

    return float(np.mean([len(_trace.plan.steps) for _trace in traces]))


__all__ = [
    "Answer",
    "ScoreReport",
    "validated_answers",
    "dsg_scores",
    "qa_score",
    "build_score_report",
    "aggregate",
    "avg_edit_steps",
]
