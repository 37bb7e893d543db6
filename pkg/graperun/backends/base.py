"""
graperun.backends.base
######################

.. autosummary::
    :toctree: generated/

    TextPart
    ImagePart
    ChatMessage
    ChatRequest
    ChatResponse
    GeneratorBackend
    EditorBackend
    ChatVisionBackend
    VQABackend
    image_part

Contracts every backend implements. The pipeline only talks to these classes,
so HTTP servers and the simulated world are interchangeable.
"""

from abc import ABC, abstractmethod
from base64 import b64encode
from dataclasses import dataclass, field
from typing import Optional, Union

from ..core import PreconditionError
from ..eval import Answer, Question
from ..log import logger
from ..model import ArtifactStore, EditInstruction, ImageRef

CHAT_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class TextPart:
    text: str

    def to_wire(self) -> dict:
        return {"type": "text", "text": self.text}


@dataclass(frozen=True)
class ImagePart:
    """
    Image attachment, either inline base64 data or a URL.
    """

    media_type: str
    data_b64: Optional[str] = None
    url: Optional[str] = None

    def __post_init__(self):
        if (self.data_b64 is None) == (self.url is None):
            logger.error("Image part needs exactly one of base64 data or a URL.")
            raise PreconditionError("Image part needs exactly one of base64 data or a URL.")

    def to_wire(self) -> dict:
        url = self.url if self.url is not None else f"data:{self.media_type};base64,{self.data_b64}"
        return {"type": "image_url", "image_url": {"url": url}}


ContentPart = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class ChatMessage:
    role: str
    parts: tuple[ContentPart, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if self.role not in CHAT_ROLES:
            logger.error(f"Unknown chat role '{self.role}', valid values: {CHAT_ROLES}")
            raise PreconditionError(f"Unknown chat role '{self.role}', valid values: {CHAT_ROLES}")

    @classmethod
    def text(cls, role: str, text: str) -> "ChatMessage":
        return cls(role, (TextPart(text),))

    @property
    def text_content(self) -> str:
        """
        All text parts joined by newlines.
        """
        return "\n".join(_part.text for _part in self.parts if isinstance(_part, TextPart))

    @property
    def images(self) -> list[ImagePart]:
        return [_part for _part in self.parts if isinstance(_part, ImagePart)]

    def to_wire(self) -> dict:
        # plain string content for text-only messages, as chat-completions servers expect
        if len(self.parts) == 1 and isinstance(self.parts[0], TextPart):
            return {"role": self.role, "content": self.parts[0].text}
        return {"role": self.role, "content": [_part.to_wire() for _part in self.parts]}


@dataclass(frozen=True)
class ChatRequest:
    """
    A chat request. Temperature and seed default to 0 so identical requests can be served from cache.
    """

    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    seed: int = 0
    max_tokens: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if len(self.messages) == 0:
            logger.error("Chat request needs at least one message.")
            raise PreconditionError("Chat request needs at least one message.")

    @property
    def system_text(self) -> str:
        return "\n".join(_m.text_content for _m in self.messages if _m.role == "system")

    @property
    def last_user(self) -> ChatMessage:
        users = [_m for _m in self.messages if _m.role == "user"]
        if len(users) == 0:
            logger.error("Chat request has no user message.")
            raise PreconditionError("Chat request has no user message.")
        return users[-1]

    def to_wire(self, model_name: str) -> dict:
        """
        Body of an OpenAI-compatible ``/v1/chat/completions`` request.

        :param model_name: Model name.
        :type model_name: str
        :return: JSON object.
        :rtype: dict
        """
        body = {
            "model": model_name,
            "messages": [_message.to_wire() for _message in self.messages],
            "temperature": self.temperature,
            "seed": self.seed,
        }
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        return body


@dataclass(frozen=True)
class ChatResponse:
    """
    Reply text and token usage. ``usage_missing`` is set when the server didn't report usage.
    """

    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    usage_missing: bool = False
    cached: bool = field(default=False, compare=False)


def image_part(image: ImageRef, store: ArtifactStore) -> ImagePart:
    """
    Attach an image from the artifact store as inline base64 data.

    :param image: Image handle.
    :type image: ImageRef
    :param store: Store holding the payload.
    :type store: ArtifactStore
    :return: Image part.
    :rtype: ImagePart
    """
    return ImagePart(image.media_type, b64encode(store.get(image)).decode("ascii"))


class GeneratorBackend(ABC):
    """
    Text-to-image model.
    """

    name = "generator"

    @abstractmethod
    def generate(self, prompt_text: str, store: ArtifactStore, seed: Optional[int] = None) -> ImageRef:
        """
        Generate an image.

        :param prompt_text: Nonempty prompt.
        :type prompt_text: str
        :param store: Store receiving the payload.
        :type store: ArtifactStore
        :param seed: Seed, defaults to the configured one.
        :type seed: int | None
        :return: Image with ``producer = generator`` and step index 0.
        :rtype: ImageRef
        """
        pass

    @staticmethod
    def check_prompt(prompt_text: str):
        if prompt_text.strip() == "":
            logger.error("Can't generate an image from an empty prompt.")
            raise PreconditionError("Can't generate an image from an empty prompt.")


class EditorBackend(ABC):
    """
    Instruction-guided image editing model.
    """

    name = "editor"

    @abstractmethod
    def edit(self, image: ImageRef, instruction: EditInstruction, store: ArtifactStore) -> ImageRef:
        """
        Apply one instruction.

        :param image: Input image.
        :type image: ImageRef
        :param instruction: Instruction.
        :type instruction: EditInstruction
        :param store: Store holding the input and receiving the output.
        :type store: ArtifactStore
        :return: Image with ``producer = editor`` and step index ``image.step_index + 1``.
        :rtype: ImageRef
        """
        pass


class ChatVisionBackend(ABC):
    """
    Multimodal chat model.
    """

    name = "planner"

    @abstractmethod
    def chat(self, request: ChatRequest) -> ChatResponse:
        pass


class VQABackend(ABC):
    """
    Model answering yes/no questions about an image.
    """

    name = "vqa"

    @abstractmethod
    def answer_binary(self, image: ImageRef, question: Question, store: ArtifactStore) -> Answer:
        """
        Answer a binary question.

        :param image: Image.
        :type image: ImageRef
        :param question: Question. HTTP answerers only use its text, simulated ones its predicate.
        :type question: Question
        :param store: Store holding the image.
        :type store: ArtifactStore
        :return: Answer.
        :rtype: Answer
        """
        pass


__all__ = [
    "CHAT_ROLES",
    "TextPart",
    "ImagePart",
    "ContentPart",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "image_part",
    "GeneratorBackend",
    "EditorBackend",
    "ChatVisionBackend",
    "VQABackend",
]
