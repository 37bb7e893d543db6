"""
graperun.core._config
#####################

.. autosummary::
    :toctree: generated/

    GrapeRunConfig

GrapeRunConfig
**************

This class inherits :class:`ConstantMixIn <graperun.core._constant.ConstantMixIn>`,
:class:`ResourceMixIn <graperun.core._resource.ResourceMixIn>`,
and :class:`DebugMixIn <graperun.core._debug.DebugMixIn>`.

Besides the methods from its parents, :class:`GrapeRunConfig` provides methods to read and access user config files.
Values missing in the user's file are taken from the bundled template, so a config only needs the keys it changes.
Relative paths in the config are resolved against the directory of the config file.
"""

from copy import deepcopy
from os import makedirs
from os.path import abspath, dirname, exists, isabs
from shutil import copyfile
from typing import Callable, Optional

import tomli
import tomli_w

from ..log import logger
from ._constant import ConstantMixIn
from ._debug import DebugMixIn
from ._resource import ResourceMixIn
from .error import ConfigError

BACKEND_ROLES = ("generator", "editor", "planner", "vqa")
BACKEND_KINDS = ("http", "simworld")
RUN_MODES = ("base", "grape", "both")
PLANNER_MODES = ("structured", "naive")
QA_AGGREGATIONS = ("per-question", "all-pass")


def _deep_update(base: dict, other: dict) -> dict:
    for key, value in other.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def _resolve_path(path: str, base_dir: str) -> str:
    if isabs(path):
        return path
    return abspath(f"{base_dir}/{path}")


class GrapeRunConfig(ConstantMixIn, ResourceMixIn, DebugMixIn):
    """
    Comprehensive class to manage graperun config, runtime constants and resource files.
    """

    def __init__(self, work_dir: str):
        """

        :param work_dir: ``graperun`` work directory path.
        :type work_dir: str
        """
        super().__init__(work_dir=work_dir)

        self._config = {}

        self._config_template_file_path = None

        self._register_graperun_uris()

    def apply_register_func(self, func_list: list[Callable[["GrapeRunConfig"], None]]):
        """
        Call register functions provided by other submodules.

        :param func_list: A list contains register functions.
        :type func_list: list[Callable[["GrapeRunConfig"], None]]
        """
        while len(func_list) != 0:
            _func = func_list.pop(0)
            _func(self)

    @classmethod
    def from_config_file(
        cls, config_file: str, register_funcs: Optional[list[Callable[["GrapeRunConfig"], None]]] = None
    ) -> "GrapeRunConfig":
        """
        Read the config file and create a instance.

        If the file doesn't exist, the template config is copied to ``config_file``
        and :class:`FileNotFoundError` is raised.

        :param config_file: Config file path.
        :type config_file: str
        :param register_funcs: Register function list. Defaults to the functions of :mod:`graperun.res`.
        :type register_funcs: list[Callable[["GrapeRunConfig"], None]]
        :return: New instance
        :rtype: GrapeRunConfig
        """
        if register_funcs is None:
            from ..res import RES_REGISTER_FUNCS

            register_funcs = list(RES_REGISTER_FUNCS)

        work_dir = "./.graperun"
        if exists(config_file):
            with open(config_file, "rb") as f:
                try:
                    work_dir = tomli.load(f).get("work_dir", work_dir)
                except tomli.TOMLDecodeError as e:
                    logger.error(f"Can't parse config file '{config_file}': {e}")
                    raise ConfigError(f"Can't parse config file '{config_file}': {e}")

        if work_dir != "":
            work_dir = _resolve_path(work_dir, abspath(dirname(config_file)))

        instance = cls(work_dir=work_dir)
        instance.apply_register_func(register_funcs)
        instance.load_graperun_config(config_file)

        return instance

    def _register_graperun_uris(self):
        for key, value in self._get_uri_map().items():
            self.register_resource_uri(key, value)

    def set_config_template_path(self, file_path: str):
        """
        Set file path of the config template file.

        :param file_path: Template file path.
        :type file_path: str
        """
        self._config_template_file_path = file_path

    def load_graperun_config(self, config_path: str):
        """
        Load configs from a config file.

        If the config path is invalid, ``GrapeRunConfig`` will create a new config file at the same place,
        and raise :class:`FileNotFoundError`.

        :param config_path: TOML config file.
        :type config_path: str
        """
        if self._config_template_file_path is None:
            logger.error("Config template path isn't set, register resource functions first.")
            raise ConfigError("Config template path isn't set, register resource functions first.")

        config_template_path = self.parse_resource_uri(self._config_template_file_path)

        if not exists(config_path):
            logger.error(f"Config file doesn't exist, copy template config to {config_path}")
            logger.error("Please modify it.")

            if dirname(config_path) != "" and not exists(dirname(config_path)):
                makedirs(dirname(config_path))

            copyfile(config_template_path, config_path)
            raise FileNotFoundError(config_path)

        with open(config_template_path, "rb") as f:
            config = tomli.load(f)

        with open(config_path, "rb") as f:
            try:
                user_config = tomli.load(f)
            except tomli.TOMLDecodeError as e:
                logger.error(f"Can't parse config file '{config_path}': {e}")
                raise ConfigError(f"Can't parse config file '{config_path}': {e}")

        self._config = _deep_update(config, user_config)
        self._check_config()

        config_dir_path = abspath(dirname(config_path))

        output_path = _resolve_path(self._config["output_path"], config_dir_path)
        self.register_resource_uri(self.GRAPERUN_OUTPUT_PATH, output_path, replace=True)

        if self._config["cache_dir"] != "":
            cache_path = _resolve_path(self._config["cache_dir"], config_dir_path)
            self.register_resource_uri(self.GRAPERUN_CACHE_PATH, cache_path, replace=True)

        if self._config["prompts_dir"] != "":
            prompts_path = _resolve_path(self._config["prompts_dir"], config_dir_path)
            self.register_resource_uri(self.GRAPERUN_PROMPTS_PATH, prompts_path, replace=True)

    def _check_config(self):
        """
        Check values which other components rely on.
        """
        run_config = self._config["run"]

        if run_config["mode"] not in RUN_MODES:
            logger.error(f"Unknown run mode '{run_config['mode']}', valid values: {RUN_MODES}")
            raise ConfigError(f"Unknown run mode '{run_config['mode']}', valid values: {RUN_MODES}")

        if run_config["planner_mode"] not in PLANNER_MODES:
            logger.error(f"Unknown planner mode '{run_config['planner_mode']}', valid values: {PLANNER_MODES}")
            raise ConfigError(f"Unknown planner mode '{run_config['planner_mode']}', valid values: {PLANNER_MODES}")

        if run_config["qa_aggregation"] not in QA_AGGREGATIONS:
            logger.error(f"Unknown QA aggregation '{run_config['qa_aggregation']}', valid values: {QA_AGGREGATIONS}")
            raise ConfigError(f"Unknown QA aggregation '{run_config['qa_aggregation']}', valid values: {QA_AGGREGATIONS}")

        if run_config["max_edit_steps"] < 0 or run_config["jobs"] < 1 or run_config["replan_rounds"] < 0:
            logger.error("'max_edit_steps' and 'replan_rounds' can't be negative, 'jobs' should be at least 1.")
            raise ConfigError("'max_edit_steps' and 'replan_rounds' can't be negative, 'jobs' should be at least 1.")

        if len(run_config["seeds"]) == 0:
            logger.error("'seeds' should contain at least one seed.")
            raise ConfigError("'seeds' should contain at least one seed.")

        for role in BACKEND_ROLES:
            if role not in self._config["backend"]:
                logger.error(f"Config of backend '{role}' isn't found in your config file.")
                raise ConfigError(f"Config of backend '{role}' isn't found in your config file.")

            kind = self._config["backend"][role]["kind"]
            if kind not in BACKEND_KINDS:
                logger.error(f"Unknown kind '{kind}' of backend '{role}', valid values: {BACKEND_KINDS}")
                raise ConfigError(f"Unknown kind '{kind}' of backend '{role}', valid values: {BACKEND_KINDS}")

        for key in ("error_rate", "noise_drop_rate", "noise_corrupt_rate"):
            value = self._config["simworld"][key]
            if not 0 <= value <= 1:
                logger.error(f"'simworld.{key}' should be in [0, 1], got {value}")
                raise ConfigError(f"'simworld.{key}' should be in [0, 1], got {value}")

    def save_graperun_config(self, save_path: str):
        """
        Save graperun config to a file.

        :param save_path: Save path of the config.
        :type save_path: str
        """
        save_path = self.parse_resource_uri(save_path)

        path_dir = dirname(save_path)
        if path_dir != "" and not exists(path_dir):
            makedirs(path_dir)

        with open(save_path, "wb") as f:
            tomli_w.dump(self._config, f)

    def __getitem__(self, item: str):
        """
        You can access graperun config like the way to access values in a dictionary.

        >>> config = GrapeRunConfig.from_config_file("config.toml")
        >>> run_config = config["run"]

        :param item: Keys.
        :type item: str
        """
        if len(self._config) == 0:
            logger.error("Attempt to read value before load config")
            raise RuntimeError("Attempt to read value before load config")

        return deepcopy(self._config[item])

    def get_run_config(self) -> dict:
        """
        Get the ``[run]`` section.

        :return: A dict object.
        :rtype: dict
        """
        return self["run"]

    def update_run_config(self, value: dict):
        """
        Update the ``[run]`` section, for example with values from command line flags.
        ``None`` values are ignored.

        :param value: Dictionary contains new values.
        :type value: dict
        """
        for key, _value in value.items():
            if _value is None:
                continue

            if key not in self._config["run"]:
                logger.error(f"Can't find key '{key}' in the run config.")
                raise KeyError(f"Can't find key '{key}' in the run config.")

            self._config["run"][key] = _value

        self._check_config()

    def get_backend_config(self, role: str) -> dict:
        """
        Get the config of a backend role.

        An exception :class:`ConfigError <graperun.core.error.ConfigError>` will be raised
        if the role is unknown.

        :param role: One of ``generator``, ``editor``, ``planner`` and ``vqa``.
        :type role: str
        :return: A dictionary.
        :rtype: dict
        """
        if role not in BACKEND_ROLES:
            logger.error(f"Unknown backend role '{role}', valid values: {BACKEND_ROLES}")
            raise ConfigError(f"Unknown backend role '{role}', valid values: {BACKEND_ROLES}")

        return self["backend"][role]

    def get_simworld_config(self) -> dict:
        """
        Get the ``[simworld]`` section.

        :return: A dict object.
        :rtype: dict
        """
        return self["simworld"]

    def get_cache_path(self) -> str:
        """
        Get the directory of the response cache.

        :return: A directory path.
        :rtype: str
        """
        return self.parse_resource_uri(self.GRAPERUN_CACHE_PATH)

    def get_output_path(self) -> str:
        """
        Get the directory in which run directories are created.

        :return: A directory path.
        :rtype: str
        """
        return self.parse_resource_uri(self.GRAPERUN_OUTPUT_PATH)

    def get_prompts_path(self) -> str:
        """
        Get the directory of the planner prompt files.

        :return: A directory path.
        :rtype: str
        """
        return self.parse_resource_uri(self.GRAPERUN_PROMPTS_PATH)


__all__ = ["GrapeRunConfig", "BACKEND_ROLES", "BACKEND_KINDS", "RUN_MODES", "PLANNER_MODES", "QA_AGGREGATIONS"]
