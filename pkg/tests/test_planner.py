import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graperun.backends import ChatRequest, ChatResponse, ChatVisionBackend
from graperun.core import (
    PlanFailureError,
    PlannerParseError,
    PreconditionError,
    QuestionGraphError,
    ScoreUnavailableError,
)
from graperun.model import EditPlan, Element, ImageKind, PlannerReport, PlanSource, Producer, PromptRecord
from graperun.planner import (
    Planner,
    alignment_score,
    assemble_planner_request,
    generate_questions,
    load_few_shot_examples,
    load_planner_prompts,
    parse_element_sections,
    parse_planner_output,
    render_element_sections,
    render_planner_report,
)
from graperun.res import RES_PATH
from graperun.simworld import oracle_plan, parse_target_scene, serialize_scene
from graperun.simworld.backends import SimPlannerBackend

BUNDLED_PROMPTS = f"{RES_PATH}/prompts"
TARGET = "a red apple on top of a white plate and a black cat"
CURRENT = "a green apple on top of a white plate and a black dog"

SUSHI_REPORT = """**Analyzing Textual Elements**
- sushi | attributes: red color
- oranges | attributes: five number | relations: next to the sushi

**Analyzing Image Elements**
- sushi
- oranges | attributes: three number

**Error Identification**
The sushi isn't red.
There are three oranges instead of five.

**Feedback**
1. Change the sushi to a red sushi
2. Add two oranges next to the sushi
"""

VALID_REPLY = """### Step 4: Feedback:
1. Change the green apple to a red apple
2. Replace the black dog with a black cat
"""


class ScriptedChat(ChatVisionBackend):
    def __init__(self, replies: list[str], prompt_tokens: int = 0, completion_tokens: int = 0):
        self.replies = list(replies)
        self.prompt_tokens = prompt_tokens
        self.completion_tokens = completion_tokens
        self.requests: list[ChatRequest] = []

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        text = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        return ChatResponse(text, self.prompt_tokens, self.completion_tokens)


@pytest.fixture
def prompt():
    return PromptRecord("p1", TARGET)


@pytest.fixture
def image(store):
    return store.put(serialize_scene(parse_target_scene(CURRENT)), ImageKind.SCENE, Producer.GENERATOR)


@pytest.fixture
def examples(store):
    return load_few_shot_examples(BUNDLED_PROMPTS, store)


def test_bundled_examples(examples):
    assert len(examples) == 2
    assert all(_example.image.kind is ImageKind.SCENE for _example in examples)
    assert all(_example.image.producer is Producer.EXTERNAL for _example in examples)


def test_structured_request(prompt, image, examples, planner_prompts, store):
    request = assemble_planner_request(prompt, image, examples, "structured", planner_prompts, store, seed=4)

    assert [_m.role for _m in request.messages] == ["system", "user", "assistant", "user", "assistant", "user"]
    assert "Analyzing Image Elements" in request.system_text
    assert request.last_user.text_content == f"Text prompt: {TARGET}"
    assert len(request.last_user.images) == 1
    assert request.last_user.images[0].media_type == "text/x-graperun-scene"
    assert request.seed == 4

    for _name in ("Analyzing Textual Elements", "Analyzing Image Elements", "Error Identification", "Feedback"):
        assert _name in request.messages[2].text_content


def test_request_is_deterministic(prompt, image, examples, planner_prompts, store):
    first = assemble_planner_request(prompt, image, examples, "structured", planner_prompts, store)
    second = assemble_planner_request(prompt, image, examples, "structured", planner_prompts, store)

    assert first.to_wire("gpt-4o") == second.to_wire("gpt-4o")


def test_naive_request(prompt, image, examples, planner_prompts, store):
    request = assemble_planner_request(prompt, image, examples, "naive", planner_prompts, store)

    assert request.system_text == planner_prompts.system_naive
    assert "Analyzing Image Elements" not in request.system_text
    assert request.messages[2].text_content == "1. Add a duck with metallic texture next to the green bench"


def test_request_checks(prompt, image, examples, planner_prompts, store):
    with pytest.raises(PreconditionError):
        assemble_planner_request(prompt, image, [], "structured", planner_prompts, store)
    with pytest.raises(PreconditionError):
        assemble_planner_request(prompt, image, examples, "free-form", planner_prompts, store)

    assert len(assemble_planner_request(prompt, image, [], "naive", planner_prompts, store).messages) == 2


def test_parse_structured_output():
    report = parse_planner_output(SUSHI_REPORT)

    assert report.plan.texts == ["Change the sushi to a red sushi", "Add two oranges next to the sushi"]
    assert [_step.ordinal for _step in report.plan.steps] == [1, 2]
    assert report.plan.source is PlanSource.MLLM
    assert report.textual_elements == (
        Element("sushi", ("red color",)),
        Element("oranges", ("five number",), ("next to the sushi",)),
    )
    assert report.image_elements[0] == Element("sushi")
    assert report.error_summary == "The sushi isn't red.\nThere are three oranges instead of five."
    assert report.raw_text == SUSHI_REPORT


def test_parse_header_variants():
    raw = "## 3. error identification\nWrong animal.\n\nFeedback: 1. Remove the dog\n2. Add a cat\n   to the scene\n"
    report = parse_planner_output(raw)

    assert report.plan.texts == ["Remove the dog", "Add a cat to the scene"]
    assert report.error_summary == "Wrong animal."


@pytest.mark.parametrize("feedback", ["No changes needed.", ""])
def test_parse_empty_plan(feedback):
    report = parse_planner_output(f"**Error Identification**\nNothing is wrong.\n\n**Feedback**\n{feedback}\n")

    assert len(report.plan) == 0


@pytest.mark.parametrize("raw", ["", "   \n", "1. Add a cat\n2. Remove the dog"])
def test_parse_structured_needs_feedback(raw):
    with pytest.raises(PlannerParseError):
        parse_planner_output(raw, "structured")


def test_parse_naive_output():
    report = parse_planner_output("The image needs two fixes:\n\n1. Add a cat to the scene\n2) Remove the dog\n", "naive")

    assert report.plan.texts == ["Add a cat to the scene", "Remove the dog"]
    assert report.plan.source is PlanSource.NAIVE_MLLM
    assert len(parse_planner_output("The image matches the prompt. No changes needed.", "naive").plan) == 0


@pytest.mark.parametrize("raw", ["The image looks fine to me.", "Both objects are there, the cat is black."])
def test_parse_naive_needs_a_plan_or_no_changes(raw):
    with pytest.raises(PlannerParseError):
        parse_planner_output(raw, "naive")


def test_error_summary_is_normalized():
    report = PlannerReport(error_summary="  The cat is missing.  \n\n   The apple isn't red.\n")

    assert report.error_summary == "The cat is missing.\nThe apple isn't red."
    assert parse_planner_output(render_planner_report(report)) == report


_WORDS = st.sampled_from(["a", "the", "red", "large", "apple", "cat", "next", "to", "is", "missing", "metallic", "two"])
_PHRASES = st.lists(_WORDS, min_size=1, max_size=5).map(" ".join)
_ELEMENTS = st.builds(
    Element,
    _PHRASES,
    st.lists(_PHRASES, max_size=3).map(tuple),
    st.lists(_PHRASES, max_size=3).map(tuple),
)
_SUMMARY_LINES = st.lists(st.tuples(st.sampled_from(["", " ", "  "]), _PHRASES, st.sampled_from(["", " "])), max_size=4)


@st.composite
def planner_reports(draw):
    lines = ["".join(_parts) for _parts in draw(_SUMMARY_LINES)]
    if draw(st.booleans()):
        lines.insert(draw(st.integers(min_value=0, max_value=len(lines))), "")

    return PlannerReport(
        textual_elements=tuple(draw(st.lists(_ELEMENTS, max_size=4))),
        image_elements=tuple(draw(st.lists(_ELEMENTS, max_size=4))),
        error_summary="\n".join(lines),
        plan=EditPlan.from_texts(draw(st.lists(_PHRASES, max_size=6)), PlanSource.MLLM),
    )


@given(planner_reports())
@settings(max_examples=500, deadline=None)
def test_rendered_reports_parse_back(report):
    assert parse_planner_output(render_planner_report(report)) == report


def test_render_planner_report():
    report = parse_planner_output(SUSHI_REPORT)

    assert parse_planner_output(render_planner_report(report)) == report
    assert render_planner_report(report, naive=True) == "1. Change the sushi to a red sushi\n2. Add two oranges next to the sushi"
    assert render_planner_report(PlannerReport(), naive=True) == "The image matches the prompt. No changes needed."


def test_element_sections():
    report = parse_planner_output(SUSHI_REPORT)
    text = render_element_sections(report)

    assert "Feedback" not in text
    assert parse_element_sections(text) == (report.textual_elements, report.image_elements)


def test_planner_asks_again(prompt, image, examples, planner_prompts, store):
    backend = ScriptedChat(["I'm not sure.", "**Feedback** is coming", VALID_REPLY], prompt_tokens=100, completion_tokens=20)
    planner = Planner(backend, planner_prompts, store, examples)

    report, usage = planner.plan(prompt, image)

    assert report.plan.texts == ["Change the green apple to a red apple", "Replace the black dog with a black cat"]
    assert all(_step.parsed_op is not None for _step in report.plan.steps)
    assert usage.planner_retries == 2
    assert usage.planner_prompt_tokens == 300
    assert usage.planner_completion_tokens == 60
    assert len(backend.requests[2].messages) == len(backend.requests[0].messages) + 4
    assert "couldn't be read" in backend.requests[2].messages[-1].text_content


def test_planner_gives_up(prompt, image, examples, planner_prompts, store):
    backend = ScriptedChat(["The image looks fine to me."])

    with pytest.raises(PlanFailureError) as error:
        Planner(backend, planner_prompts, store, examples, attempts=3).plan(prompt, image)

    assert error.value.attempts == 3
    assert len(backend.requests) == 3


def test_planner_keeps_unparseable_instructions(prompt, image, examples, planner_prompts, store):
    backend = ScriptedChat(["**Feedback**\n1. Make the apple shinier\n2. Remove the black dog\n"])

    report, usage = Planner(backend, planner_prompts, store, examples).plan(prompt, image)

    assert report.plan.steps[0].parsed_op is None
    assert report.plan.steps[1].parsed_op is not None
    assert usage.planner_retries == 0


@pytest.mark.parametrize("mode, source", [("structured", PlanSource.MLLM), ("naive", PlanSource.NAIVE_MLLM)])
def test_planner_with_simulated_backend(mode, source, prompt, image, examples, planner_prompts, store):
    planner = Planner(SimPlannerBackend(), planner_prompts, store, examples, mode=mode)

    report, usage = planner.plan(prompt, image)

    assert report.plan.texts == oracle_plan(parse_target_scene(TARGET), parse_target_scene(CURRENT)).texts
    assert report.plan.source is source
    assert usage.planner_prompt_tokens > 0 and usage.planner_completion_tokens > 0
    assert not usage.usage_missing


def test_simulated_planner_on_an_aligned_image(store, examples, planner_prompts):
    aligned = store.put(serialize_scene(parse_target_scene(TARGET)), ImageKind.SCENE, Producer.GENERATOR)

    report, _ = Planner(SimPlannerBackend(), planner_prompts, store, examples).plan(PromptRecord("p1", TARGET), aligned)

    assert report.plan == EditPlan(source=PlanSource.MLLM)


@pytest.mark.parametrize("reply, expected", [("Score: 87", 87), ("I'd say 150.", 100), ("0", 1)])
def test_alignment_score(reply, expected, planner_prompts):
    report = parse_planner_output(SUSHI_REPORT)
    backend = ScriptedChat([reply])

    assert alignment_score(report, backend, planner_prompts) == expected
    assert "Change the sushi" not in backend.requests[0].last_user.text_content
    assert backend.requests[0].system_text == planner_prompts.system_scoring


def test_alignment_score_failures(planner_prompts):
    with pytest.raises(PreconditionError):
        alignment_score(PlannerReport(textual_elements=(Element("cat"),)), ScriptedChat(["50"]), planner_prompts)

    backend = ScriptedChat(["It looks quite good."])
    with pytest.raises(ScoreUnavailableError):
        alignment_score(parse_planner_output(SUSHI_REPORT), backend, planner_prompts, attempts=2)
    assert len(backend.requests) == 2


def test_simulated_alignment_score(planner_prompts):
    elements = (Element("cat", ("black color",)), Element("plate", ("white color",)))

    assert alignment_score(PlannerReport(elements, elements), SimPlannerBackend(), planner_prompts) == 100
    assert alignment_score(PlannerReport(elements, elements[:1]), SimPlannerBackend(), planner_prompts) == 50


def test_generate_questions():
    backend = ScriptedChat(
        [
            "Here you go:\n"
            '{"id": "q1", "text": "Is there a cat?", "parents": []}\n'
            '  {"id": "q2", "text": "Is the cat black?", "parents": ["q1"]}\n'
        ]
    )

    graph = generate_questions("a black cat", backend)

    assert graph.ids == ["q1", "q2"]
    assert graph.get("q2").parents == ("q1",)
    assert backend.requests[0].last_user.text_content == "a black cat"


@pytest.mark.parametrize(
    "reply",
    [
        "Is there a cat? Is the cat black?",
        '{"id": "q1", "text": "Is there a cat?"',
        '{"id": "q1", "text": "Is there a cat?", "parents": ["q2"]}\n{"id": "q2", "text": "Is it black?", "parents": ["q1"]}',
    ],
)
def test_generate_questions_failures(reply):
    with pytest.raises(QuestionGraphError):
        generate_questions("a black cat", ScriptedChat([reply]))


def test_prompt_files(tmp_path, store):
    prompts_dir = tmp_path / "prompts"
    shutil.copytree(BUNDLED_PROMPTS, prompts_dir)

    (prompts_dir / "user_planner.txt").write_text("Prompt goes here.")
    with pytest.raises(PreconditionError):
        load_planner_prompts(str(prompts_dir))

    (prompts_dir / "user_vqa.txt").unlink()
    with pytest.raises(FileNotFoundError):
        load_planner_prompts(str(prompts_dir))

    (prompts_dir / "few_shot.jsonl").unlink()
    assert load_few_shot_examples(str(prompts_dir), store) == []
