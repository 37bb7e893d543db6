import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graperun.core import OracleUnanswerableError, QuestionGraphError, ScoreInputError
from graperun.eval import (
    Answer,
    Predicate,
    Question,
    QuestionGraph,
    ScoreReport,
    aggregate,
    avg_edit_steps,
    build_score_report,
    dsg_scores,
    load_question_graph,
    qa_score,
    validated_answers,
)
from graperun.model import EditPlan, ImageKind, ImageRef, PipelineTrace, PlanSource, Producer, PromptRecord


def _graph(edges: dict[str, list[str]]) -> QuestionGraph:
    return QuestionGraph(tuple(Question(_id, f"question {_id}?", tuple(_parents)) for _id, _parents in edges.items()))


@st.composite
def dags_with_answers(draw):
    """Random DAG: question i may only depend on questions with a smaller index."""
    size = draw(st.integers(min_value=0, max_value=12))
    edges = {}
    for _index in range(size):
        parents = draw(st.sets(st.integers(min_value=0, max_value=_index - 1), max_size=3)) if _index > 0 else set()
        edges[f"q{_index}"] = [f"q{_parent}" for _parent in sorted(parents)]
    answers = {_id: draw(st.sampled_from([Answer.YES, Answer.NO])) for _id in edges}
    return edges, answers


def _ancestors(edges: dict[str, list[str]], question_id: str) -> set[str]:
    seen: set[str] = set()
    stack = list(edges[question_id])
    while stack:
        parent = stack.pop()
        if parent not in seen:
            seen.add(parent)
            stack.extend(edges[parent])
    return seen


@given(dags_with_answers())
@settings(max_examples=1000)
def test_validated_answer_matches_ancestor_oracle(case):
    edges, answers = case
    graph = _graph(edges)
    validated = validated_answers(answers, graph)

    for _id in edges:
        expected = answers[_id] is Answer.YES and all(answers[_a] is Answer.YES for _a in _ancestors(edges, _id))
        assert (validated[_id] is Answer.YES) == expected


@given(dags_with_answers())
@settings(max_examples=1000)
def test_dsg_never_exceeds_dsg_without_dependency(case):
    edges, answers = case
    dsg, dsg_no_dep = dsg_scores(answers, _graph(edges))
    assert 0.0 <= dsg <= dsg_no_dep <= 1.0


@pytest.mark.parametrize("size", [1, 2, 3, 4, 5])
def test_every_small_graph_matches_ancestor_oracle(size):
    pairs = [(_child, _parent) for _child in range(size) for _parent in range(_child)]

    for _mask in itertools.product([False, True], repeat=len(pairs)):
        edges = {f"q{_index}": [] for _index in range(size)}
        for (_child, _parent), _on in zip(pairs, _mask):
            if _on:
                edges[f"q{_child}"].append(f"q{_parent}")
        graph = _graph(edges)

        for _values in itertools.product([Answer.YES, Answer.NO], repeat=size):
            answers = dict(zip(edges, _values))
            validated = validated_answers(answers, graph)
            expected = {
                _id: answers[_id] is Answer.YES and all(answers[_a] is Answer.YES for _a in _ancestors(edges, _id))
                for _id in edges
            }

            assert {_id: _answer is Answer.YES for _id, _answer in validated.items()} == expected
            dsg, dsg_no_dep = dsg_scores(answers, graph)
            assert dsg == sum(expected.values()) / size
            assert dsg <= dsg_no_dep


@given(dags_with_answers(), st.data())
@settings(max_examples=500)
def test_scores_ignore_question_order(case, data):
    edges, answers = case
    shuffled = dict(data.draw(st.permutations(list(edges.items()))))

    assert dsg_scores(answers, _graph(shuffled)) == dsg_scores(answers, _graph(edges))
    assert validated_answers(answers, _graph(shuffled)) == validated_answers(answers, _graph(edges))


@given(dags_with_answers(), st.data())
@settings(max_examples=500)
def test_turning_a_no_into_yes_never_lowers_scores(case, data):
    edges, answers = case
    noes = sorted(_id for _id, _answer in answers.items() if _answer is Answer.NO)
    if len(noes) == 0:
        return

    flipped = {**answers, data.draw(st.sampled_from(noes)): Answer.YES}
    before, after = dsg_scores(answers, _graph(edges)), dsg_scores(flipped, _graph(edges))

    assert after[0] >= before[0]
    assert after[1] > before[1]


@given(dags_with_answers())
@settings(max_examples=100)
def test_topological_order_puts_parents_first(case):
    edges, _ = case
    order = _graph(edges).topological_order()
    position = {_id: _index for _index, _id in enumerate(order)}

    assert sorted(order) == sorted(edges)
    for _id, _parents in edges.items():
        assert all(position[_parent] < position[_id] for _parent in _parents)


def test_chain_invalidation():
    graph = _graph({"q1": [], "q2": ["q1"], "q3": []})
    dsg, dsg_no_dep = dsg_scores({"q1": "no", "q2": "yes", "q3": "yes"}, graph)
    assert dsg_no_dep == pytest.approx(2 / 3)
    assert dsg == pytest.approx(1 / 3)


def test_diamond():
    graph = _graph({"root": [], "left": ["root"], "right": ["root"], "leaf": ["left", "right"]})
    answers = {"root": True, "left": True, "right": True, "leaf": False}
    assert dsg_scores(answers, graph) == (pytest.approx(0.75), pytest.approx(0.75))


def test_all_yes_and_missing_answers():
    graph = _graph({"q1": [], "q2": ["q1"]})
    assert dsg_scores({"q1": "yes", "q2": "yes"}, graph) == (1.0, 1.0)
    assert dsg_scores({"q1": "yes"}, graph) == (0.5, 0.5)


def test_unknown_ids_and_values():
    graph = _graph({"q1": []})
    with pytest.raises(ScoreInputError):
        dsg_scores({"q9": "yes"}, graph)
    with pytest.raises(ScoreInputError):
        dsg_scores({"q1": "maybe"}, graph)


def test_empty_graph_scores_zero():
    assert dsg_scores({}, QuestionGraph()) == (0.0, 0.0)
    assert qa_score({}, QuestionGraph()) == 0.0


def test_qa_score():
    graph = _graph({f"q{_i}": [] for _i in range(8)})
    answers = {f"q{_i}": _i != 3 for _i in range(8)}

    assert qa_score(answers, graph) == pytest.approx(0.875)
    assert qa_score(answers, graph, "all-pass") == 0.0
    assert qa_score({_id: True for _id in answers}, graph, "all-pass") == 1.0

    with pytest.raises(ScoreInputError):
        qa_score(answers, graph, "best-of")


def test_build_score_report():
    graph = _graph({"q1": [], "q2": ["q1"]})
    report = build_score_report(2, {"q1": "no", "q2": "yes"}, graph, unanswered_count=1)

    assert report.step_index == 2
    assert report.answers == {"q1": Answer.NO, "q2": Answer.YES}
    assert (report.dsg, report.dsg_no_dep, report.qa) == (0.0, 0.5, 0.5)
    assert report.unanswered_count == 1


def test_score_report_invariant():
    with pytest.raises(ScoreInputError):
        ScoreReport(step_index=0, dsg=0.8, dsg_no_dep=0.5)


def test_graph_errors():
    with pytest.raises(QuestionGraphError):
        _graph({"q1": [], "q2": ["q9"]})

    with pytest.raises(QuestionGraphError, match="cycle"):
        _graph({"q1": ["q2"], "q2": ["q1"]})

    with pytest.raises(QuestionGraphError):
        QuestionGraph((Question("q1", "a?"), Question("q1", "b?")))

    with pytest.raises(QuestionGraphError):
        Predicate(type="attribute", noun="apple", key="color")


def test_question_without_predicate():
    with pytest.raises(OracleUnanswerableError):
        Question("q1", "Is there a duck?").require_predicate()


def test_load_chain(tmp_path):
    path = tmp_path / "chain.jsonl"
    records = [
        {"id": "q1", "text": "Is there a duck?", "parents": [], "predicate": {"type": "exists", "noun": "duck"}},
        {"id": "q2", "text": "Is the duck metallic?", "parents": ["q1"]},
        {"id": "q3", "text": "Is the metallic duck shiny?", "parents": ["q2"]},
    ]
    path.write_text("\n".join(json.dumps(_r) for _r in records) + "\n")

    graph = load_question_graph(str(path))
    assert len(graph) == 3
    assert graph.depth() == 2
    assert graph.get("q1").require_predicate() == Predicate(type="exists", noun="duck")


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_question_graph(str(tmp_path / "none.jsonl"))

    cycle = tmp_path / "cycle.jsonl"
    cycle.write_text('{"id": "q1", "text": "a?", "parents": ["q2"]}\n{"id": "q2", "text": "b?", "parents": ["q1"]}\n')
    with pytest.raises(QuestionGraphError):
        load_question_graph(str(cycle))

    broken = tmp_path / "broken.jsonl"
    broken.write_text("{")
    with pytest.raises(QuestionGraphError):
        load_question_graph(str(broken))


def test_aggregate():
    mean, std = aggregate([[0.8], [0.9]])
    assert mean == pytest.approx(0.85)
    assert std == pytest.approx(0.0707, abs=1e-4)

    assert aggregate([[0.2, 0.4]]) == (pytest.approx(0.3), 0.0)
    assert aggregate([[0.5, 0.5], [0.5, 0.5]])[1] == 0.0

    with pytest.raises(ScoreInputError):
        aggregate([])


def _trace(plan_length: int) -> PipelineTrace:
    image = ImageRef("a" * 64, ImageKind.SCENE, "objects/aa/" + "a" * 64, Producer.GENERATOR)
    plan = EditPlan.from_texts([f"Add object {_i}" for _i in range(plan_length)], PlanSource.ORACLE)
    return PipelineTrace(PromptRecord("p", "a cat"), (image,), plan, executed_steps=0, truncated=plan_length > 0)


def test_avg_edit_steps():
    assert avg_edit_steps([_trace(2), _trace(3), _trace(3)]) == pytest.approx(8 / 3)
    assert avg_edit_steps([_trace(0), _trace(0)]) == 0.0

    with pytest.raises(ScoreInputError):
        avg_edit_steps([])
