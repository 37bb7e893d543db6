"""
graperun.core._resource
#######################

.. autosummary::
    :toctree: generated/

    ResourceMixIn

ResourceMixIn
*************

Paths in config values and resource constants are written with URIs like ``:GRAPERUN_PROMPTS_PATH:/few_shot.jsonl``,
so the same config works wherever the package and the work directory live. A URI looks like ``:GRAPERUN_<NAME>:``
and may point to a path which contains another URI; :meth:`ResourceMixIn.parse_resource_uri` resolves them until
none is left.

.. code-block:: Python
    :caption: main.py

    config.register_resource_uri(":GRAPERUN_EXAMPLES_PATH:", ":GRAPERUN_PROMPTS_PATH:/examples")
    config.parse_resource_uri(":GRAPERUN_EXAMPLES_PATH:/apple_cat.scene")
"""

import re

from ..log import logger
from .error import ResourceURIError

_URI_PATTERN = re.compile(r"^:GRAPERUN_[A-Z0-9_]+:")


class ResourceMixIn:
    """
    Map ``:GRAPERUN_*:`` URIs to real paths.
    """

    def __init__(self, *args, **kwargs):
        self._resource_uris: dict[str, str] = {}

        super().__init__(*args, **kwargs)

    def check_resource_uri(self, unique_uri: str) -> bool:
        """
        Check if the URI has been registered.

        :param unique_uri: URI.
        :type unique_uri: str
        :return: ``True`` if registered.
        :rtype: bool
        """
        return unique_uri in self._resource_uris

    def register_resource_uri(self, unique_uri: str, res_space_path: str, replace: bool = False):
        """
        Map a URI to a path.

        :param unique_uri: URI, for example ``":GRAPERUN_PROMPTS_PATH:"``.
        :type unique_uri: str
        :param res_space_path: Absolute path, or a path starting with another URI.
        :type res_space_path: str
        :param replace: Replace the path of a registered URI instead of raising :class:`ResourceURIError`.
        :type replace: bool
        """
        match = _URI_PATTERN.match(unique_uri)
        if match is None or match.end() != len(unique_uri):
            logger.error(f"Invalid resource URI '{unique_uri}', it should look like ':GRAPERUN_NAME:'.")
            raise ResourceURIError(f"Invalid resource URI '{unique_uri}', it should look like ':GRAPERUN_NAME:'.")

        if unique_uri in self._resource_uris and not replace:
            logger.error(f"Resource URI '{unique_uri}' exists.")
            raise ResourceURIError(f"Resource URI '{unique_uri}' exists.")

        logger.debug(f"Register URI '{unique_uri}' to '{res_space_path}'")
        self._resource_uris[unique_uri] = res_space_path

    def parse_resource_uri(self, resource_path: str) -> str:
        """
        Replace the leading URI of a path with its registered path, repeatedly. Plain paths are returned unchanged.

        :param resource_path: Path which may start with a URI.
        :type resource_path: str
        :return: Real path.
        :rtype: str
        """
        seen = set()
        while (match := _URI_PATTERN.match(resource_path)) is not None:
            uri = match.group(0)
            if uri not in self._resource_uris:
                logger.error(f"Unknown resource URI: '{uri}'")
                raise ResourceURIError(f"Unknown resource URI: '{uri}'")

            if uri in seen:
                logger.error(f"Resource URI '{uri}' refers to itself.")
                raise ResourceURIError(f"Resource URI '{uri}' refers to itself.")

            seen.add(uri)
            resource_path = self._resource_uris[uri] + resource_path[match.end() :]

        return resource_path


__all__ = ["ResourceMixIn"]
