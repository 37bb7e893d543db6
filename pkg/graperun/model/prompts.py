"""
graperun.model.prompts
######################

.. autosummary::
    :toctree: generated/

    load_prompt_set
    dump_prompt_set

Prompt sets are JSONL files with one prompt per line:

.. code-block:: json

    {"id": "cm-k1-0001", "text": "a red car", "benchmark": "conceptmix", "k": 1,
     "questions": [{"id": "q1", "text": "Is there a car?", "parents": []}]}

``questions`` may also be the path of a question file, relative to the prompt set.
"""

from json import JSONDecodeError, dumps, loads
from os.path import abspath, dirname, exists, isabs
from typing import Iterable, List

from ..core import PreconditionError
from ..eval.graph import load_question_graph
from ..log import logger
from .types import CONCEPTMIX_K, Benchmark, PromptRecord


def load_prompt_set(path: str, strict_k: bool = True) -> List[PromptRecord]:
    """
    Read a prompt set.

    :param path: JSONL file path.
    :type path: str
    :param strict_k: If ``True``, ConceptMix prompts must have K in 1, 3, 5 or 7.
    :type strict_k: bool
    :return: Prompt records in file order.
    :rtype: list
    """
    if not exists(path):
        logger.error(f"Prompt set '{path}' not found.")
        raise FileNotFoundError(f"Prompt set '{path}' not found.")

    base_dir = abspath(dirname(path))
    records: List[PromptRecord] = []
    seen_ids = set()

    with open(path, "r") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue

            try:
                value = loads(line)
            except JSONDecodeError as e:
                logger.error(f"Can't parse line {line_no} of '{path}': {e}")
                raise PreconditionError(f"Can't parse line {line_no} of '{path}': {e}")

            questions = value.get("questions", [])
            if isinstance(questions, str):
                question_path = questions if isabs(questions) else f"{base_dir}/{questions}"
                value["questions"] = load_question_graph(question_path).to_records()

            record = PromptRecord.from_dict(value)

            if record.id in seen_ids:
                logger.error(f"Duplicated prompt id '{record.id}' in '{path}'")
                raise PreconditionError(f"Duplicated prompt id '{record.id}' in '{path}'")
            seen_ids.add(record.id)

            if strict_k and record.benchmark is Benchmark.CONCEPTMIX and record.k not in CONCEPTMIX_K:
                logger.error(f"ConceptMix prompt '{record.id}' has K={record.k}, expected one of {CONCEPTMIX_K}")
                raise PreconditionError(f"ConceptMix prompt '{record.id}' has K={record.k}, expected one of {CONCEPTMIX_K}")

            records.append(record)

    logger.info(f"Read {len(records)} prompts from '{path}'")
    return records


def dump_prompt_set(records: Iterable[PromptRecord], path: str):
    """
    Write a prompt set with embedded questions.

    :param records: Prompt records.
    :type records: Iterable[PromptRecord]
    :param path: JSONL file path.
    :type path: str
    """
    with open(path, "w") as f:
        for _record in records:
            f.write(dumps(_record.to_dict(), ensure_ascii=False) + "\n")


__all__ = ["load_prompt_set", "dump_prompt_set"]
