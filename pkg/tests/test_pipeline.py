import pytest

from graperun.backends import ChatRequest, ChatResponse, ChatVisionBackend, GeneratorBackend, VQABackend
from graperun.core import BackendError, PreconditionError, VQAUnparseableError
from graperun.model import CostReport, ImageKind, PlanSource, Producer, PromptRecord, TraceStatus
from graperun.pipeline import RunConfig, account, run_base, run_grape, score_trace
from graperun.planner import Planner, load_few_shot_examples
from graperun.res import RES_PATH
from graperun.simworld import (
    deserialize_scene,
    generate_prompt_set,
    oracle_plan,
    parse_target_scene,
    questions_for_scene,
    scenes_equivalent,
    serialize_scene,
)
from graperun.simworld.backends import PredicateVQA, RuleEditor, SimGenerator, SimPlannerBackend

APPLE_CAT = "a red apple on top of a white plate and a black cat"
BENCH_DUCK = "a green bench and a duck with metallic texture next to the green bench"


class FixedGenerator(GeneratorBackend):
    """Generate the same scene for every prompt."""

    def __init__(self, scene_prompt: str):
        self.payload = serialize_scene(parse_target_scene(scene_prompt))

    def generate(self, prompt_text, store, seed=None):
        self.check_prompt(prompt_text)
        return store.put(self.payload, ImageKind.SCENE, Producer.GENERATOR, 0)


class BrokenGenerator(GeneratorBackend):
    def generate(self, prompt_text, store, seed=None):
        raise BackendError("generator is down", 4)


class ScriptedChat(ChatVisionBackend):
    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.calls = 0

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.calls += 1
        text = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        return ChatResponse(text, 50, 10)


class MuteVQA(VQABackend):
    """Refuse to answer one question, answer the others from the scene."""

    def __init__(self, question_id: str):
        self.question_id = question_id
        self.oracle = PredicateVQA()

    def answer_binary(self, image, question, store):
        if question.id == self.question_id:
            raise VQAUnparseableError("mumble")
        return self.oracle.answer_binary(image, question, store)


def _feedback(*instructions: str) -> str:
    lines = [f"{_index}. {_text}" for _index, _text in enumerate(instructions, start=1)]
    return "**Feedback**\n" + ("\n".join(lines) if lines else "No changes needed.") + "\n"


def _scene(store, image):
    return deserialize_scene(store.get(image))


@pytest.fixture
def sim_planner(planner_prompts, store):
    return Planner(SimPlannerBackend(), planner_prompts, store, mode="naive")


def _scripted_planner(replies, planner_prompts, store, attempts=3):
    return Planner(ScriptedChat(replies), planner_prompts, store, mode="naive", attempts=attempts)


def test_edits_reach_the_target(store, sim_planner):
    current = "a green apple on top of a white plate and a black dog"
    expected = oracle_plan(parse_target_scene(APPLE_CAT), parse_target_scene(current))
    editor = RuleEditor()

    trace = run_grape(
        PromptRecord("p1", APPLE_CAT), FixedGenerator(current), sim_planner, editor, store, RunConfig(planner_mode="naive")
    )

    assert len(expected) >= 2
    assert trace.plan.texts == expected.texts
    assert trace.executed_steps == len(expected)
    assert len(trace.images) == len(expected) + 1
    assert editor.calls == len(expected)
    assert [_image.step_index for _image in trace.images] == list(range(len(expected) + 1))
    assert trace.images[0].producer is Producer.GENERATOR
    assert all(_image.producer is Producer.EDITOR for _image in trace.images[1:])
    assert scenes_equivalent(_scene(store, trace.final_image), parse_target_scene(APPLE_CAT))
    assert trace.status is TraceStatus.COMPLETE and not trace.truncated
    assert trace.mode == "grape-naive"


def test_aligned_image_is_not_edited(store, sim_planner):
    editor = RuleEditor()

    trace = run_grape(
        PromptRecord("p1", APPLE_CAT), FixedGenerator(APPLE_CAT), sim_planner, editor, store, RunConfig(planner_mode="naive")
    )

    assert len(trace.images) == 1
    assert len(trace.plan) == 0
    assert editor.calls == 0
    assert trace.status is TraceStatus.COMPLETE


def test_simulated_generator_with_faults(store, sim_planner):
    generator = SimGenerator(error_rate=1.0)
    scene, faults = generator.degraded_scene(APPLE_CAT, seed=3)

    trace = run_grape(
        PromptRecord("p1", APPLE_CAT), generator, sim_planner, RuleEditor(), store, RunConfig(planner_mode="naive", seed=3)
    )

    assert len(faults) > 0
    assert store.get(trace.images[0]) == serialize_scene(scene)
    assert len(trace.plan) <= len(faults)
    assert scenes_equivalent(_scene(store, trace.final_image), parse_target_scene(APPLE_CAT))
    assert trace.seed == 3


@pytest.fixture
def structured_planner(planner_prompts, store):
    return Planner(SimPlannerBackend(), planner_prompts, store, load_few_shot_examples(f"{RES_PATH}/prompts", store))


def test_empty_generated_scene(store, structured_planner):
    generator = SimGenerator(error_rate=1.0)
    seed = next(_seed for _seed in range(50) if len(generator.degraded_scene("a red apple", _seed)[0].objects) == 0)
    prompt = PromptRecord("p1", "a red apple", questions=questions_for_scene(parse_target_scene("a red apple")))

    trace = run_grape(prompt, generator, structured_planner, RuleEditor(), store, RunConfig(seed=seed))
    trace = score_trace(trace, PredicateVQA(), store)

    assert store.get(trace.images[0]) == b""
    assert trace.status is TraceStatus.COMPLETE
    assert trace.plan.texts == ["Add a red apple to the scene"]
    assert [_report.dsg for _report in trace.scores] == [0.0, 1.0]


@pytest.mark.parametrize("error_rate", [0.3, 0.6, 1.0])
def test_simulated_loop_converges(error_rate, store, structured_planner):
    generator = SimGenerator(error_rate=error_rate)
    config = RunConfig(max_edit_steps=16)

    for _seed in range(200):
        prompt = generate_prompt_set(1, 1 + _seed % 8, seed=_seed)[0]
        _, faults = generator.degraded_scene(prompt.text, config.seed)

        trace = run_grape(prompt, generator, structured_planner, RuleEditor(), store, config)
        trace = score_trace(trace, PredicateVQA(), store, jobs=1)
        dsg = [_report.dsg for _report in trace.scores]

        assert trace.status is TraceStatus.COMPLETE, prompt.text
        assert len(trace.plan) <= len(faults), prompt.text
        assert dsg[-1] == 1.0, prompt.text
        assert all(_before <= _after for _before, _after in zip(dsg, dsg[1:])), prompt.text


def test_long_plans_are_truncated(store, planner_prompts):
    planner = _scripted_planner(
        [
            _feedback(
                "Change the red apple to a green apple",
                "Change the green apple to a blue apple",
                "Change the blue apple to a yellow apple",
                "Change the yellow apple to a pink apple",
                "Change the pink apple to a purple apple",
            )
        ],
        planner_prompts,
        store,
    )

    trace = run_grape(
        PromptRecord("p1", "a purple apple"),
        FixedGenerator("a red apple"),
        planner,
        RuleEditor(),
        store,
        RunConfig(max_edit_steps=3, planner_mode="naive"),
    )

    assert len(trace.plan) == 5
    assert trace.executed_steps == 3
    assert len(trace.images) == 4
    assert trace.truncated
    assert trace.status is TraceStatus.COMPLETE
    assert scenes_equivalent(_scene(store, trace.final_image), parse_target_scene("a yellow apple"))


def test_zero_edit_steps(store, sim_planner):
    trace = run_grape(
        PromptRecord("p1", APPLE_CAT),
        FixedGenerator("a green apple on top of a white plate and a black dog"),
        sim_planner,
        RuleEditor(),
        store,
        RunConfig(max_edit_steps=0, planner_mode="naive"),
    )

    assert len(trace.images) == 1
    assert trace.truncated


def test_rejected_edit_keeps_earlier_images(store, planner_prompts):
    reply = _feedback("Remove the red apple", "Remove the red apple", "Add a cat to the scene")
    planner = _scripted_planner([reply], planner_prompts, store)

    trace = run_grape(
        PromptRecord("p1", "a cat"), FixedGenerator("a red apple"), planner, RuleEditor(), store, RunConfig(planner_mode="naive")
    )

    assert trace.status is TraceStatus.PARTIAL
    assert trace.failure.startswith("step 2")
    assert len(trace.images) == 2
    assert trace.executed_steps == 1
    assert trace.truncated


def test_plan_failure(store, planner_prompts):
    planner = _scripted_planner(["   "], planner_prompts, store, attempts=2)
    editor = RuleEditor()

    trace = run_grape(
        PromptRecord("p1", APPLE_CAT), FixedGenerator("a red apple"), planner, editor, store, RunConfig(planner_mode="naive")
    )

    assert trace.status is TraceStatus.PLAN_FAILED
    assert len(trace.images) == 1
    assert len(trace.plan) == 0
    assert trace.accounting.planner_retries == 1
    assert editor.calls == 0
    assert "2 attempts" in trace.failure


class InvalidRequestChat(ChatVisionBackend):
    def chat(self, request: ChatRequest) -> ChatResponse:
        raise PreconditionError("Planner request has no 'Text prompt:' line.")


def test_invalid_planner_request_fails_the_plan(store, planner_prompts):
    planner = Planner(InvalidRequestChat(), planner_prompts, store, mode="naive")

    trace = run_grape(
        PromptRecord("p1", APPLE_CAT), FixedGenerator("a red apple"), planner, RuleEditor(), store, RunConfig(planner_mode="naive")
    )

    assert trace.status is TraceStatus.PLAN_FAILED
    assert len(trace.images) == 1
    assert "Text prompt" in trace.failure


def test_generation_failure_propagates(store, sim_planner):
    with pytest.raises(BackendError):
        run_grape(PromptRecord("p1", APPLE_CAT), BrokenGenerator(), sim_planner, RuleEditor(), store)


def test_replan_rounds(store, planner_prompts):
    backend = ScriptedChat(
        [
            _feedback("Change the red apple to a green apple"),
            _feedback("Change the green apple to a blue apple"),
            _feedback(),
        ]
    )
    planner = Planner(backend, planner_prompts, store, mode="naive")

    trace = run_grape(
        PromptRecord("p1", "a blue apple"),
        FixedGenerator("a red apple"),
        planner,
        RuleEditor(),
        store,
        RunConfig(planner_mode="naive", replan_rounds=3),
    )

    assert backend.calls == 3
    assert trace.plan.texts == ["Change the red apple to a green apple", "Change the green apple to a blue apple"]
    assert trace.plan.source is PlanSource.NAIVE_MLLM
    assert len(trace.images) == 3
    assert trace.accounting.planner_prompt_tokens == 150
    assert trace.accounting.planner_completion_tokens == 30
    assert scenes_equivalent(_scene(store, trace.final_image), parse_target_scene("a blue apple"))


@pytest.mark.parametrize(
    "mode, source, trace_mode", [("structured", PlanSource.MLLM, "grape"), ("naive", PlanSource.NAIVE_MLLM, "grape-naive")]
)
def test_planner_mode_follows_the_run_config(mode, source, trace_mode, store, planner_prompts):
    examples = load_few_shot_examples(f"{RES_PATH}/prompts", store)
    planner = Planner(SimPlannerBackend(), planner_prompts, store, examples, mode="structured")

    trace = run_grape(
        PromptRecord("p1", APPLE_CAT), FixedGenerator("a red apple"), planner, RuleEditor(), store, RunConfig(planner_mode=mode)
    )

    assert trace.plan.source is source
    assert trace.mode == trace_mode
    assert scenes_equivalent(_scene(store, trace.final_image), parse_target_scene(APPLE_CAT))


def test_run_base(store):
    generator = SimGenerator(error_rate=0.0)

    trace = run_base(PromptRecord("p1", APPLE_CAT), generator, store, seed=2)

    assert trace.mode == "base" and trace.seed == 2
    assert len(trace.images) == 1 and len(trace.plan) == 0
    assert scenes_equivalent(_scene(store, trace.final_image), parse_target_scene(APPLE_CAT))
    assert generator.calls == 1


def test_score_trace(store, sim_planner):
    prompt = PromptRecord("p1", BENCH_DUCK, questions=questions_for_scene(parse_target_scene(BENCH_DUCK)))
    trace = run_grape(prompt, FixedGenerator("a green bench"), sim_planner, RuleEditor(), store, RunConfig(planner_mode="naive"))

    scored = score_trace(trace, PredicateVQA(), store)

    assert [_report.step_index for _report in scored.scores] == [0, 1]
    assert [_report.dsg for _report in scored.scores] == pytest.approx([0.4, 1.0])
    assert [_report.qa for _report in scored.scores] == pytest.approx([0.4, 1.0])
    assert all(_report.unanswered_count == 0 for _report in scored.scores)
    assert trace.scores is None


def test_unanswered_questions_count_as_no(store, sim_planner):
    prompt = PromptRecord("p1", BENCH_DUCK, questions=questions_for_scene(parse_target_scene(BENCH_DUCK)))
    trace = run_grape(prompt, FixedGenerator("a green bench"), sim_planner, RuleEditor(), store, RunConfig(planner_mode="naive"))

    scored = score_trace(trace, MuteVQA("q5"), store, jobs=2)

    final = scored.scores[-1]
    assert final.unanswered_count == 1
    assert final.dsg == pytest.approx(0.8)
    assert final.answers["q5"].value == "no"


def test_all_pass_aggregation(store, sim_planner):
    prompt = PromptRecord("p1", BENCH_DUCK, questions=questions_for_scene(parse_target_scene(BENCH_DUCK)))
    trace = run_grape(prompt, FixedGenerator("a green bench"), sim_planner, RuleEditor(), store, RunConfig(planner_mode="naive"))

    scored = score_trace(trace, PredicateVQA(), store, qa_aggregation="all-pass")

    assert [_report.qa for _report in scored.scores] == [0.0, 1.0]


def test_score_trace_needs_questions(store):
    trace = run_base(PromptRecord("p1", APPLE_CAT), SimGenerator(), store)

    with pytest.raises(PreconditionError):
        score_trace(trace, PredicateVQA(), store)


def test_account(store):
    trace = run_base(PromptRecord("p1", APPLE_CAT), SimGenerator(), store)
    trace = trace.with_accounting(CostReport(planner_prompt_tokens=2000, planner_completion_tokens=400, planner_retries=1))

    cost = account(trace, 2.50, 10.00)

    assert cost.estimated_planning_cost == pytest.approx(9.0)
    assert cost.planner_prompt_tokens == 2000
    assert cost.planner_retries == 1


def test_account_without_usage(store):
    trace = run_base(PromptRecord("p1", APPLE_CAT), SimGenerator(), store)
    trace = trace.with_accounting(CostReport(usage_missing=True))

    cost = account(trace, 2.50, 10.00)

    assert cost.estimated_planning_cost == 0.0
    assert cost.usage_missing


@pytest.mark.parametrize(
    "kwargs",
    [{"max_edit_steps": -1}, {"replan_rounds": -2}, {"planner_mode": "chatty"}, {"qa_aggregation": "majority"}],
)
def test_run_config_checks(kwargs):
    with pytest.raises(PreconditionError):
        RunConfig(**kwargs)


def test_run_config_from_dict():
    config = RunConfig.from_dict({"max_edit_steps": 4, "planner_mode": "naive", "seeds": [1, 2]}, seed=2)

    assert config == RunConfig(max_edit_steps=4, planner_mode="naive", seed=2)
    assert config.trace_mode == "grape-naive"
    assert RunConfig().trace_mode == "grape"
