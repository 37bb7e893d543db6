"""
graperun.backends.factory
#########################

.. autosummary::
    :toctree: generated/

    BackendSet
    build_backends

Build the four backend roles from the ``[backend.*]`` sections of a config file.
``kind = "simworld"`` selects the simulated backends of :doc:`simworld </api/simworld>`,
``kind = "http"`` the HTTP backends sharing one response cache.
"""

from dataclasses import dataclass, field
from typing import Optional

import httpx

from ..core import BACKEND_ROLES, GrapeRunConfig
from ..log import logger
from ..planner.prompts import PlannerPrompts
from ..simworld.backends import NoisyPlanner, PredicateVQA, RuleEditor, SimGenerator, SimPlannerBackend
from .base import ChatVisionBackend, EditorBackend, GeneratorBackend, VQABackend
from .cache import ResponseCache
from .config import BackendConfig
from .http import HTTPBackendBase, HTTPChatBackend, HTTPEditorBackend, HTTPGeneratorBackend
from .vqa import ChatVQABackend


@dataclass
class BackendSet:
    """
    Backends of one run, and the configs they were built from.
    """

    generator: GeneratorBackend
    editor: EditorBackend
    planner: ChatVisionBackend
    vqa: VQABackend
    configs: dict[str, BackendConfig] = field(default_factory=dict)

    def close(self):
        """
        Close the HTTP clients.
        """
        backends = [self.generator, self.editor, self.planner, self.vqa]
        if isinstance(self.vqa, ChatVQABackend):
            backends.append(self.vqa.chat_backend)

        for _backend in backends:
            if isinstance(_backend, HTTPBackendBase):
                _backend.close()

    def upstream_calls(self) -> dict[str, int]:
        """
        Requests sent to servers so far, per role. Simulated backends count 0.

        :return: Counts keyed by role.
        :rtype: dict
        """
        vqa = self.vqa.chat_backend if isinstance(self.vqa, ChatVQABackend) else self.vqa
        return {
            _role: _backend.upstream_calls if isinstance(_backend, HTTPBackendBase) else 0
            for _role, _backend in zip(BACKEND_ROLES, (self.generator, self.editor, self.planner, vqa))
        }


def build_backends(
    config: GrapeRunConfig, prompts: PlannerPrompts, transports: Optional[dict[str, httpx.BaseTransport]] = None
) -> BackendSet:
    """
    Build the backends a config asks for.

    :param config: Loaded config.
    :type config: GrapeRunConfig
    :param prompts: Planner prompts, ``user_vqa`` is the question template of an HTTP VQA backend.
    :type prompts: PlannerPrompts
    :param transports: ``httpx`` transports keyed by role, for tests and recording.
    :type transports: dict | None
    :return: Backends.
    :rtype: BackendSet
    """
    transports = {} if transports is None else transports
    configs = {_role: BackendConfig.from_dict(_role, config.get_backend_config(_role)) for _role in BACKEND_ROLES}
    simworld = config.get_simworld_config()

    cache: Optional[ResponseCache] = None
    if any(_c.kind == "http" and _c.cache for _c in configs.values()):
        cache = ResponseCache(f"{config.get_cache_path()}/responses")

    def http_args(role: str) -> dict:
        return {"config": configs[role], "cache": cache, "transport": transports.get(role)}

    generator: GeneratorBackend
    match configs["generator"].kind:
        case "simworld":
            generator = SimGenerator(simworld["error_rate"], configs["generator"].seed)
        case _:
            generator = HTTPGeneratorBackend(**http_args("generator"))

    editor: EditorBackend
    match configs["editor"].kind:
        case "simworld":
            editor = RuleEditor()
        case _:
            editor = HTTPEditorBackend(**http_args("editor"))

    planner: ChatVisionBackend
    match configs["planner"].kind:
        case "simworld":
            planner = SimPlannerBackend()
            if simworld["noise_drop_rate"] > 0 or simworld["noise_corrupt_rate"] > 0:
                logger.info(
                    f"Simulated planner drops {simworld['noise_drop_rate']:.0%} and garbles "
                    f"{simworld['noise_corrupt_rate']:.0%} of instructions."
                )
                planner = NoisyPlanner(
                    planner, simworld["noise_drop_rate"], simworld["noise_corrupt_rate"], configs["planner"].seed
                )
        case _:
            planner = HTTPChatBackend(**http_args("planner"))

    vqa: VQABackend
    match configs["vqa"].kind:
        case "simworld":
            vqa = PredicateVQA()
        case _:
            vqa = ChatVQABackend(HTTPChatBackend(**http_args("vqa")), prompts.user_vqa, configs["vqa"].max_attempts)

    logger.info("Backends: " + ", ".join(f"{_role}={_c.kind}" for _role, _c in configs.items()))

    return BackendSet(generator, editor, planner, vqa, configs)


__all__ = ["BackendSet", "build_backends"]
