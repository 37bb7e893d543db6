"""
graperun.core.type
##################

Define custom types of the JSON documents ``graperun`` reads and writes.

.. autosummary::
    :toctree: generated/

    PredicateDict
    QuestionDict
    PromptRecordDict
    FewShotRecordDict
    ExchangeDict
"""

from typing import List, Optional, TypedDict, Union


class PredicateDict(TypedDict, total=False):
    """
    Structured predicate of a question, answerable by the simulated VQA.

    .. py:attribute:: type
        :type: str

        ``"exists"``, ``"attribute"`` or ``"relation"``.

    .. py:attribute:: noun
        :type: str

        Noun of the object the question is about.

    .. py:attribute:: count
        :type: int

        For ``exists``: exact number of objects with this noun. Omitted means "at least one".

    .. py:attribute:: key
        :type: str

        For ``attribute``: concept key, for example ``"color"``.

    .. py:attribute:: value
        :type: str

        For ``attribute``: expected value.

    .. py:attribute:: predicate
        :type: str

        For ``relation``: spatial predicate, for example ``"next to"``.

    .. py:attribute:: object
        :type: str

        For ``relation``: noun of the second object.
    """

    type: str
    noun: str
    count: int
    key: str
    value: str
    predicate: str
    object: str


class QuestionDict(TypedDict):
    """
    One line of a question file.

    .. py:attribute:: id
        :type: str

    .. py:attribute:: text
        :type: str

    .. py:attribute:: parents
        :type: list[str]

    .. py:attribute:: predicate
        :type: PredicateDict | None
    """

    id: str
    text: str
    parents: List[str]
    predicate: Optional[PredicateDict]


class PromptRecordDict(TypedDict, total=False):
    """
    One line of a prompt set.

    ``questions`` is either a list of :class:`QuestionDict` or the path of a question file,
    which is resolved against the directory of the prompt set.
    """

    id: str
    text: str
    benchmark: str
    k: Optional[int]
    questions: Union[List[QuestionDict], str]


class FewShotRecordDict(TypedDict):
    """
    One line of ``few_shot.jsonl``. Paths are relative to the prompts directory.

    .. py:attribute:: prompt_text
        :type: str

    .. py:attribute:: image
        :type: str

    .. py:attribute:: image_kind
        :type: str

        ``"raster"`` or ``"scene"``.

    .. py:attribute:: report
        :type: str
    """

    prompt_text: str
    image: str
    image_kind: str
    report: str


class ExchangeDict(TypedDict):
    """
    One recorded HTTP exchange.

    Bodies are base64 encoded so binary image payloads survive JSON.
    """

    method: str
    path: str
    request_body: str
    status_code: int
    content_type: str
    response_body: str


__all__ = ["PredicateDict", "QuestionDict", "PromptRecordDict", "FewShotRecordDict", "ExchangeDict"]
