"""
graperun.backends.vqa
#####################

.. autosummary::
    :toctree: generated/

    normalize_binary_answer
    ChatVQABackend
"""

import re
from typing import Optional

from ..core import VQAUnparseableError
from ..eval import Answer, Question
from ..log import logger
from ..model import ArtifactStore, ImageRef
from .base import ChatMessage, ChatRequest, ChatVisionBackend, TextPart, VQABackend, image_part

DEFAULT_QUESTION_TEMPLATE = "{question}\nAnswer with a single word: yes or no."
RETRY_HINT = "Reply with exactly one word: yes or no."

_ANSWER_RE = re.compile(r"^\W*(yes|no)\b", re.IGNORECASE)


def normalize_binary_answer(reply: str) -> Optional[Answer]:
    """
    Read a leading "yes" or "no", ignoring case and punctuation.

    >>> normalize_binary_answer("Yes, clearly.")
    <Answer.YES: 'yes'>

    :param reply: Reply text.
    :type reply: str
    :return: Answer, or ``None`` if the reply starts with something else.
    :rtype: Answer | None
    """
    found = _ANSWER_RE.match(reply.strip())
    return None if found is None else Answer(found.group(1).lower())


class ChatVQABackend(VQABackend):
    """
    Answer binary questions with a chat-vision model.
    """

    def __init__(self, chat_backend: ChatVisionBackend, question_template: str = DEFAULT_QUESTION_TEMPLATE, attempts: int = 3):
        """
        :param chat_backend: Chat backend.
        :type chat_backend: ChatVisionBackend
        :param question_template: User message with a ``{question}`` slot.
        :type question_template: str
        :param attempts: Requests before giving up on an unparseable reply.
        :type attempts: int
        """
        self.chat_backend = chat_backend
        self.question_template = question_template
        self.attempts = max(1, attempts)

    def answer_binary(self, image: ImageRef, question: Question, store: ArtifactStore) -> Answer:
        messages = [
            ChatMessage("user", (TextPart(self.question_template.format(question=question.text)), image_part(image, store)))
        ]

        replies = []
        for _ in range(self.attempts):
            reply = self.chat_backend.chat(ChatRequest(tuple(messages))).text
            answer = normalize_binary_answer(reply)
            if answer is not None:
                return answer

            replies.append(reply)
            # a changed request, so a cached reply isn't served again
            messages += [ChatMessage.text("assistant", reply), ChatMessage.text("user", RETRY_HINT)]

        logger.error(f"Can't read a yes/no answer to '{question.text}' from replies {replies}")
        raise VQAUnparseableError(f"Can't read a yes/no answer to '{question.text}' from replies {replies}")


__all__ = ["DEFAULT_QUESTION_TEMPLATE", "RETRY_HINT", "normalize_binary_answer", "ChatVQABackend"]
