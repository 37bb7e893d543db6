"""
graperun.backends.config
########################

.. autosummary::
    :toctree: generated/

    BackendConfig
"""

from dataclasses import asdict, dataclass, fields

from ..core import BACKEND_KINDS, ConfigError
from ..log import logger


@dataclass(frozen=True)
class BackendConfig:
    """
    Settings of one backend role, read from a ``[backend.<role>]`` section of the config file.

    The API key itself is never part of the config, only the name of the environment variable holding it.
    """

    role: str
    kind: str = "simworld"
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env_var: str = ""
    timeout_seconds: float = 60.0
    max_retries: int = 3
    seed: int = 0
    temperature: float = 0.0
    price_per_1k_prompt_tokens: float = 0.0
    price_per_1k_completion_tokens: float = 0.0
    max_in_flight: int = 4
    cache: bool = True
    backoff_seconds: float = 0.5
    max_backoff_seconds: float = 8.0

    def __post_init__(self):
        problems = []
        if self.kind not in BACKEND_KINDS:
            problems.append(f"kind should be one of {BACKEND_KINDS}, got '{self.kind}'")
        if self.timeout_seconds <= 0:
            problems.append(f"timeout_seconds should be positive, got {self.timeout_seconds}")
        if self.max_retries < 0:
            problems.append(f"max_retries should be >= 0, got {self.max_retries}")
        if self.price_per_1k_prompt_tokens < 0 or self.price_per_1k_completion_tokens < 0:
            problems.append("prices should be >= 0")
        if self.max_in_flight < 1:
            problems.append(f"max_in_flight should be >= 1, got {self.max_in_flight}")
        if self.backoff_seconds < 0 or self.max_backoff_seconds < self.backoff_seconds:
            problems.append("backoff should satisfy 0 <= backoff_seconds <= max_backoff_seconds")

        if len(problems) > 0:
            logger.error(f"Invalid config of backend '{self.role}': {'; '.join(problems)}")
            raise ConfigError(f"Invalid config of backend '{self.role}': {'; '.join(problems)}")

    @classmethod
    def from_dict(cls, role: str, value: dict) -> "BackendConfig":
        """
        Create a config from a config file section. Unknown keys are ignored with a warning.

        :param role: Backend role.
        :type role: str
        :param value: Section values.
        :type value: dict
        :return: Config.
        :rtype: BackendConfig
        """
        names = {_field.name for _field in fields(cls)} - {"role"}
        unknown = sorted(set(value) - names)
        if len(unknown) > 0:
            logger.warning(f"Ignore unknown keys of backend '{role}': {unknown}")

        return cls(role=role, **{_key: _value for _key, _value in value.items() if _key in names})

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def max_attempts(self) -> int:
        return self.max_retries + 1


__all__ = ["BackendConfig"]
