"""
graperun.core._constant
#######################

.. autosummary::
    :toctree: generated/

    ConstantMixIn

ConstantMixIn
*************

This class provides methods to manage runtime constants of ``graperun``: the work directory,
where runs are written, where the response cache lives and where planner prompts are read from.
"""

from os import environ
from os.path import abspath


class ConstantMixIn:
    """
    Define all paths that will be used by other components.
    """

    def __init__(self, work_dir: str, *args, **kwargs):
        """
        Define all paths that will be used by other components.

        They are mapped to URIs, so components only need to know the URI.

        :param work_dir: ``graperun`` work directory path. If it is ``""``, use ``$HOME/.config/graperun``.
        :type work_dir: str
        """
        if work_dir != "":
            self._GRAPERUN_HOME_PATH = abspath(work_dir)

        else:
            self._GRAPERUN_HOME_PATH = abspath(f"{environ.get('HOME', '.')}/.config/graperun")

        self._GRAPERUN_TEMP_PATH = f"{self._GRAPERUN_HOME_PATH}/tmp"
        self._GRAPERUN_CACHE_PATH = f"{self._GRAPERUN_HOME_PATH}/cache"

        self._GRAPERUN_OUTPUT_PATH = ":GRAPERUN_OUTPUT_PATH:"
        self._GRAPERUN_RESOURCE_PATH = ":GRAPERUN_RESOURCE_PATH:"

        super().__init__(*args, **kwargs)

    def _get_uri_map(self) -> dict[str, str]:
        """
        Return URIs and their values.
        ``graperun`` will use this to register uri when initialize config.

        :return: A dict in which URIs are keys and their values are dictionary values.
        :rtype: dict
        """
        return {
            self.GRAPERUN_HOME_PATH: self._GRAPERUN_HOME_PATH,
            self.GRAPERUN_TEMP_PATH: self._GRAPERUN_TEMP_PATH,
            self.GRAPERUN_CACHE_PATH: self._GRAPERUN_CACHE_PATH,
        }

    @property
    def GRAPERUN_HOME_PATH(self) -> str:
        """
        Root work path of ``graperun``.

        :return: URI
        :rtype: str
        """
        return ":GRAPERUN_HOME_PATH:"

    @property
    def GRAPERUN_TEMP_PATH(self) -> str:
        """
        Path to store ``graperun`` temporary files.

        :return: URI
        :rtype: str
        """
        return ":GRAPERUN_TEMP_PATH:"

    @property
    def GRAPERUN_CACHE_PATH(self) -> str:
        """
        Path of the content-addressed response cache.

        :return: URI
        :rtype: str
        """
        return ":GRAPERUN_CACHE_PATH:"

    @property
    def GRAPERUN_OUTPUT_PATH(self) -> str:
        """
        Path in which run directories are created.

        :return: URI
        :rtype: str
        """
        return self._GRAPERUN_OUTPUT_PATH

    @property
    def GRAPERUN_RESOURCE_PATH(self) -> str:
        """
        Path of the bundled resource files.

        :return: URI
        :rtype: str
        """
        return self._GRAPERUN_RESOURCE_PATH

    @property
    def GRAPERUN_PROMPTS_PATH(self) -> str:
        """
        Path of the planner prompt directory.

        :return: URI
        :rtype: str
        """
        return ":GRAPERUN_PROMPTS_PATH:"


__all__ = ["ConstantMixIn"]
