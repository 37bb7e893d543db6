import json

import pytest

from graperun.core import PayloadMissingError, PreconditionError
from graperun.eval import Answer, ScoreReport
from graperun.model import (
    ArtifactStore,
    Benchmark,
    CostReport,
    EditInstruction,
    EditPlan,
    ImageKind,
    ImageRef,
    PipelineTrace,
    PlanSource,
    Producer,
    PromptRecord,
    TraceStatus,
    content_id,
    dump_prompt_set,
    load_prompt_set,
)


def test_content_id_of_empty_payload():
    assert content_id(b"") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_content_id_is_stable_and_sensitive():
    payload = b"object o1 bench color=green\n"
    assert content_id(payload) == content_id(payload)
    assert content_id(payload) != content_id(payload[:-1] + b"!")


def test_store_put_is_idempotent(tmp_path):
    store = ArtifactStore(str(tmp_path))
    first = store.put(b"scene bytes", ImageKind.SCENE, Producer.GENERATOR)
    second = store.put(b"scene bytes", ImageKind.SCENE, Producer.GENERATOR)

    assert first == second
    assert first.locator == f"objects/{first.content_id[:2]}/{first.content_id}"
    assert store.get(first) == b"scene bytes"
    assert store.get_text(first) == "scene bytes"


def test_store_sniffs_png(tmp_path):
    store = ArtifactStore(str(tmp_path))
    image = store.put(b"\x89PNG\r\n\x1a\n" + b"\x00" * 8, ImageKind.RASTER, Producer.GENERATOR)
    assert image.media_type == "image/png"


def test_store_missing_payload(tmp_path):
    store = ArtifactStore(str(tmp_path))
    image = ImageRef("00" * 32, ImageKind.SCENE, ArtifactStore.locator_of("00" * 32), Producer.GENERATOR)
    assert not store.contains(image)
    with pytest.raises(PayloadMissingError):
        store.get(image)


@pytest.mark.parametrize(
    "producer, step_index",
    [(Producer.GENERATOR, 1), (Producer.EXTERNAL, 2), (Producer.EDITOR, 0), (Producer.EDITOR, -1)],
)
def test_image_ref_step_index_rule(producer, step_index):
    with pytest.raises(PreconditionError):
        ImageRef("a" * 64, ImageKind.SCENE, "objects/aa/x", producer, step_index)


def test_edit_plan_ordinals():
    plan = EditPlan.from_texts(["Add a duck", "Remove the cat"], PlanSource.MLLM)
    assert [_step.ordinal for _step in plan.steps] == [1, 2]
    assert plan.texts == ["Add a duck", "Remove the cat"]
    assert len(EditPlan()) == 0

    with pytest.raises(PreconditionError):
        EditPlan(steps=(EditInstruction(2, "Add a duck"),))

    with pytest.raises(PreconditionError):
        EditInstruction(1, "   ")


def test_cost_report_rejects_negative_values():
    with pytest.raises(PreconditionError):
        CostReport(planner_prompt_tokens=-1)


def test_prompt_record_rejects_question_path():
    with pytest.raises(PreconditionError):
        PromptRecord.from_dict({"id": "p1", "text": "a red apple", "questions": "questions.jsonl"})

    with pytest.raises(PreconditionError):
        PromptRecord(id="", text="a red apple")


def _image(store: ArtifactStore, text: str, step: int) -> ImageRef:
    producer = Producer.GENERATOR if step == 0 else Producer.EDITOR
    return store.put(text.encode("utf-8"), ImageKind.SCENE, producer, step)


def test_trace_shape_invariant(tmp_path):
    store = ArtifactStore(str(tmp_path))
    prompt = PromptRecord(id="p1", text="a red apple")
    plan = EditPlan.from_texts(["Add a red apple to the scene", "Remove the dog"], PlanSource.MLLM)
    images = (_image(store, "a", 0), _image(store, "b", 1))

    trace = PipelineTrace(prompt, images, plan, executed_steps=1, truncated=True, status=TraceStatus.PARTIAL)
    assert trace.final_image == images[1]

    with pytest.raises(PreconditionError):
        PipelineTrace(prompt, images, plan, executed_steps=2, truncated=False)

    with pytest.raises(PreconditionError):
        PipelineTrace(prompt, images, plan, executed_steps=1, truncated=False)

    with pytest.raises(PreconditionError):
        trace.with_scores((ScoreReport(step_index=0),))


def test_manifest_leaves_timings_out(tmp_path):
    store = ArtifactStore(str(tmp_path))
    prompt = PromptRecord(id="p1", text="a red apple", benchmark=Benchmark.CONCEPTMIX, k=1)
    trace = PipelineTrace(
        prompt,
        (_image(store, "a", 0),),
        accounting=CostReport(planner_prompt_tokens=10, generation_seconds=1.5),
        scores=(ScoreReport(step_index=0, answers={}, dsg=0.5, dsg_no_dep=1.0, qa=1.0),),
    )

    manifest = trace.to_manifest()
    assert "generation_seconds" not in manifest["accounting"]

    restored = PipelineTrace.from_manifest(json.loads(json.dumps(manifest)), trace.accounting.timings())
    assert restored == trace


def test_prompt_set_round_trip_with_question_file(tmp_path):
    questions = tmp_path / "q.jsonl"
    questions.write_text(
        "\n".join(
            [
                json.dumps({"id": "q1", "text": "Is there an apple?", "parents": []}),
                json.dumps({"id": "q2", "text": "Is the apple red?", "parents": ["q1"]}),
            ]
        )
    )
    prompts = tmp_path / "prompts.jsonl"
    prompts.write_text(
        json.dumps({"id": "p1", "text": "a red apple", "benchmark": "conceptmix", "k": 1, "questions": "q.jsonl"}) + "\n\n"
    )

    records = load_prompt_set(str(prompts))
    assert len(records) == 1
    assert records[0].questions.ids == ["q1", "q2"]

    dump_prompt_set(records, str(tmp_path / "out.jsonl"))
    assert load_prompt_set(str(tmp_path / "out.jsonl")) == records


def test_prompt_set_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_prompt_set(str(tmp_path / "missing.jsonl"))

    broken = tmp_path / "broken.jsonl"
    broken.write_text('{"id": "p1", "text": "a cat"}\n{not json\n')
    with pytest.raises(PreconditionError):
        load_prompt_set(str(broken))

    duplicated = tmp_path / "dup.jsonl"
    duplicated.write_text('{"id": "p1", "text": "a cat"}\n{"id": "p1", "text": "a dog"}\n')
    with pytest.raises(PreconditionError):
        load_prompt_set(str(duplicated))


def test_conceptmix_k_check(tmp_path):
    path = tmp_path / "k.jsonl"
    path.write_text('{"id": "p1", "text": "a cat and a dog", "benchmark": "conceptmix", "k": 2}\n')

    with pytest.raises(PreconditionError):
        load_prompt_set(str(path))

    assert load_prompt_set(str(path), strict_k=False)[0].k == 2


def test_answer_enum_is_shared_with_manifests():
    report = ScoreReport(step_index=0, answers={"q1": Answer.YES}, dsg=1.0, dsg_no_dep=1.0, qa=1.0)
    assert report.to_dict()["answers"] == {"q1": "yes"}
