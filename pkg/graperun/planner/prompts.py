"""
graperun.planner.prompts
########################

.. autosummary::
    :toctree: generated/

    PlannerPrompts
    FewShotExample
    load_planner_prompts
    load_few_shot_examples

Prompt files of the planner, read from a prompts directory so they can be edited without touching the code:

============================ ============================================================
``system_structured.txt``    System prompt asking for the four analysis sections.
``system_naive.txt``         System prompt asking for an edit plan only.
``system_scoring.txt``       System prompt of the 1-100 alignment scorer.
``user_planner.txt``         User message, ``{prompt}`` is replaced by the text prompt.
``user_vqa.txt``             Question message, ``{question}`` is replaced by the question.
``few_shot.jsonl``           Few-shot examples, see :class:`FewShotRecordDict <graperun.core.type.FewShotRecordDict>`.
============================ ============================================================
"""

from dataclasses import dataclass
from json import JSONDecodeError, loads
from os.path import abspath, dirname, exists

from ..core import FewShotRecordDict, PreconditionError
from ..log import logger
from ..model import ArtifactStore, ImageKind, ImageRef, Producer
from .parse import parse_planner_output

PROMPT_FILES = ("system_structured.txt", "system_naive.txt", "system_scoring.txt", "user_planner.txt", "user_vqa.txt")


@dataclass(frozen=True)
class PlannerPrompts:
    """
    Texts of the prompt files.
    """

    system_structured: str
    system_naive: str
    system_scoring: str
    user_planner: str
    user_vqa: str

    def system_prompt(self, mode: str) -> str:
        return self.system_structured if mode == "structured" else self.system_naive


@dataclass(frozen=True)
class FewShotExample:
    """
    A prompt, an image generated from it, and the planner output expected for them.
    """

    prompt_text: str
    image: ImageRef
    expected_report_text: str


def _read_text(path: str) -> str:
    if not exists(path):
        logger.error(f"Prompt file '{path}' not found.")
        raise FileNotFoundError(f"Prompt file '{path}' not found.")

    with open(path, "r") as f:
        return f.read().strip("\n")


def load_planner_prompts(prompts_dir: str) -> PlannerPrompts:
    """
    Read the prompt files of a prompts directory.

    :param prompts_dir: Directory path.
    :type prompts_dir: str
    :return: Prompts.
    :rtype: PlannerPrompts
    """
    texts = [_read_text(f"{prompts_dir}/{_name}") for _name in PROMPT_FILES]

    for _name, _text, _slot in (("user_planner.txt", texts[3], "{prompt}"), ("user_vqa.txt", texts[4], "{question}")):
        if _slot not in _text:
            logger.error(f"Prompt file '{_name}' needs a '{_slot}' slot.")
            raise PreconditionError(f"Prompt file '{_name}' needs a '{_slot}' slot.")

    return PlannerPrompts(*texts)


def load_few_shot_examples(prompts_dir: str, store: ArtifactStore) -> list[FewShotExample]:
    """
    Read ``few_shot.jsonl`` and put the example images into the artifact store.
    Paths in the file are relative to the prompts directory.

    :param prompts_dir: Directory path.
    :type prompts_dir: str
    :param store: Artifact store.
    :type store: ArtifactStore
    :return: Examples, empty if the file doesn't exist.
    :rtype: list
    """
    manifest_path = f"{prompts_dir}/few_shot.jsonl"
    if not exists(manifest_path):
        logger.warning(f"No few-shot examples in '{prompts_dir}'.")
        return []

    base_dir = abspath(dirname(manifest_path))
    examples = []
    with open(manifest_path, "r") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue

            try:
                record: FewShotRecordDict = loads(line)
                image_path = f"{base_dir}/{record['image']}"
                report_text = _read_text(f"{base_dir}/{record['report']}")
                kind = ImageKind(record.get("image_kind", "raster"))
            except (JSONDecodeError, KeyError, ValueError) as e:
                logger.error(f"Bad few-shot record at line {line_no} of '{manifest_path}': {e}")
                raise PreconditionError(f"Bad few-shot record at line {line_no} of '{manifest_path}': {e}")

            # expected outputs must parse
            parse_planner_output(report_text, "structured")

            with open(image_path, "rb") as image_file:
                image = store.put(image_file.read(), kind, Producer.EXTERNAL, 0)

            examples.append(FewShotExample(record["prompt_text"], image, report_text))

    return examples


__all__ = ["PROMPT_FILES", "PlannerPrompts", "FewShotExample", "load_planner_prompts", "load_few_shot_examples"]
