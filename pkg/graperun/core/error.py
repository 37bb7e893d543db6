"""
graperun.core.error
###################

This module defines all exceptions used in ``graperun``.

.. autosummary::
    :toctree: generated/

    GrapeRunBasicError
    ConfigError
    ResourceURIError
    PreconditionError
    PayloadMissingError
    BackendError
    BackendStatusError
    InstructionRejectedError
    PlannerParseError
    PlanFailureError
    ScoreUnavailableError
    VQAUnparseableError
    SceneGrammarError
    InstructionUnparseableError
    TargetNotFoundError
    OracleUnanswerableError
    QuestionGraphError
    ScoreInputError
    ReportError
    FixtureError
"""

from typing import Optional, Tuple


class GrapeRunBasicError(Exception):
    """
    Basic exception class of ``graperun``. New exception **MUST** inherit this class.
    """

    pass


class ConfigError(GrapeRunBasicError):
    """
    Exception indicates the config of ``graperun`` can't be used.
    """

    pass


class ResourceURIError(GrapeRunBasicError):
    """
    Exception indicates ``graperun`` can't parse the URI.
    """

    pass


class PreconditionError(GrapeRunBasicError, ValueError):
    """
    Exception indicates the arguments of an operation violate its precondition,
    for example an empty prompt or an empty message list.
    """

    pass


class PayloadMissingError(GrapeRunBasicError):
    """
    Exception indicates the payload of an ``ImageRef`` can't be found in the artifact store.
    """

    pass


class BackendError(GrapeRunBasicError):
    """
    Exception indicates a backend call failed in transport (connection error, timeout)
    after all retries.
    """

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class BackendStatusError(BackendError):
    """
    Exception indicates a backend answered with a non-2xx status code.
    """

    def __init__(self, message: str, status_code: int, body_excerpt: str = "", attempts: int = 1):
        super().__init__(message, attempts)
        self.status_code = status_code
        self.body_excerpt = body_excerpt


class InstructionRejectedError(GrapeRunBasicError):
    """
    Exception indicates the editing backend can't apply an edit instruction.
    """

    pass


class PlannerParseError(GrapeRunBasicError):
    """
    Exception indicates the planner output can't be parsed into a report.
    """

    pass


class PlanFailureError(GrapeRunBasicError):
    """
    Exception indicates the planner didn't produce a usable plan after all attempts.
    """

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class ScoreUnavailableError(GrapeRunBasicError):
    """
    Exception indicates the alignment scorer didn't answer with an integer.
    """

    pass


class VQAUnparseableError(GrapeRunBasicError):
    """
    Exception indicates the VQA backend didn't answer with yes or no.
    """

    pass


class SceneGrammarError(GrapeRunBasicError):
    """
    Exception indicates a simworld prompt doesn't follow the scene grammar.
    ``span`` is the ``(start, end)`` character range of the offending tokens.
    """

    def __init__(self, message: str, span: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.span = span


class InstructionUnparseableError(GrapeRunBasicError):
    """
    Exception indicates an edit instruction matches no template of the instruction grammar.
    """

    pass


class TargetNotFoundError(GrapeRunBasicError):
    """
    Exception indicates the target of an edit operation isn't in the scene.
    """

    pass


class OracleUnanswerableError(GrapeRunBasicError):
    """
    Exception indicates a question carries no structured predicate, so the simulated VQA can't answer it.
    """

    pass


class QuestionGraphError(GrapeRunBasicError):
    """
    Exception indicates a question file is invalid: duplicated ids, dangling parents or a cycle.
    """

    pass


class ScoreInputError(GrapeRunBasicError):
    """
    Exception indicates the input of a scoring function is invalid.
    """

    pass


class ReportError(GrapeRunBasicError):
    """
    Exception indicates run directories can't be combined into one report.
    """

    pass


class FixtureError(GrapeRunBasicError):
    """
    Exception indicates a request doesn't match the recorded HTTP fixture.
    """

    pass


__all__ = [
    "GrapeRunBasicError",
    "ConfigError",
    "ResourceURIError",
    "PreconditionError",
    "PayloadMissingError",
    "BackendError",
    "BackendStatusError",
    "InstructionRejectedError",
    "PlannerParseError",
    "PlanFailureError",
    "ScoreUnavailableError",
    "VQAUnparseableError",
    "SceneGrammarError",
    "InstructionUnparseableError",
    "TargetNotFoundError",
    "OracleUnanswerableError",
    "QuestionGraphError",
    "ScoreInputError",
    "ReportError",
    "FixtureError",
]
