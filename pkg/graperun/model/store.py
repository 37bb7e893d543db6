"""
graperun.model.store
####################

.. autosummary::
    :toctree: generated/

    ArtifactStore

Content-addressed storage of image payloads. A payload with id ``abcdef...`` is stored at
``<root>/objects/ab/abcdef...``; storing the same bytes twice writes only once.
"""

from os import replace
from os.path import exists
from tempfile import NamedTemporaryFile

from ..core import PayloadMissingError
from ..log import logger
from ..utils import check_path
from .types import SCENE_MEDIA_TYPE, ImageKind, ImageRef, Producer, content_id, sniff_media_type


class ArtifactStore:
    """
    Store image payloads by content id.
    """

    def __init__(self, root: str):
        """
        :param root: Root directory, created if it doesn't exist.
        :type root: str
        """
        self.root = root
        check_path(f"{root}/objects")

    @staticmethod
    def locator_of(payload_id: str) -> str:
        """
        Locator of a content id, relative to the store root.

        :param payload_id: Content id.
        :type payload_id: str
        :return: Relative path.
        :rtype: str
        """
        return f"objects/{payload_id[:2]}/{payload_id}"

    def put(self, payload: bytes, kind: ImageKind, producer: Producer, step_index: int = 0) -> ImageRef:
        """
        Store a payload and return its handle.

        :param payload: Payload bytes.
        :type payload: bytes
        :param kind: Payload kind.
        :type kind: ImageKind
        :param producer: Who produced the image.
        :type producer: Producer
        :param step_index: Edit step of the image.
        :type step_index: int
        :return: Handle.
        :rtype: ImageRef
        """
        payload_id = content_id(payload)
        locator = self.locator_of(payload_id)
        path = f"{self.root}/{locator}"

        if not exists(path):
            check_path(f"{self.root}/objects/{payload_id[:2]}")
            # concurrent writers of the same id write the same bytes, so the last rename wins harmlessly
            with NamedTemporaryFile("wb", dir=f"{self.root}/objects/{payload_id[:2]}", delete=False) as f:
                f.write(payload)
                temp_path = f.name
            replace(temp_path, path)
            logger.debug(f"Stored payload {payload_id[:12]} ({len(payload)} bytes)")

        media_type = SCENE_MEDIA_TYPE if kind is ImageKind.SCENE else sniff_media_type(payload)
        return ImageRef(payload_id, kind, locator, producer, step_index, media_type)

    def contains(self, image: ImageRef) -> bool:
        return exists(f"{self.root}/{image.locator}")

    def get(self, image: ImageRef) -> bytes:
        """
        Read the payload of an image.

        :param image: Handle.
        :type image: ImageRef
        :return: Payload bytes.
        :rtype: bytes
        """
        path = f"{self.root}/{image.locator}"

        if not exists(path):
            logger.error(f"Payload {image.content_id} not found in store '{self.root}'")
            raise PayloadMissingError(f"Payload {image.content_id} not found in store '{self.root}'")

        with open(path, "rb") as f:
            return f.read()

    def get_text(self, image: ImageRef) -> str:
        """
        Read a scene payload as text.

        :param image: Handle.
        :type image: ImageRef
        :return: Text.
        :rtype: str
        """
        return self.get(image).decode("utf-8")


__all__ = ["ArtifactStore"]
