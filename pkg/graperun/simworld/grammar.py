"""
graperun.simworld.grammar
#########################

.. autosummary::
    :toctree: generated/

    parse_target_scene
    render_target_prompt
    parse_edit_instruction
    render_instruction
    render_object_phrase

Two small grammars: one for target prompts, one for edit instructions.

Target prompts
**************

.. code-block:: text

    prompt      ::= clause ( ( "," | "and" | "," "and" ) clause )*
    clause      ::= np [ predicate np ]
    np          ::= det adjective* noun suffix*
    det         ::= "a" | "an" | "one" | "two" ... "eight" | "the"
    suffix      ::= "with" value key | "in" style-value "style"
    predicate   ::= "on top of" | "under" | "next to" | "surrounded by" | "around" | "in front of" | "behind"
                  | "to the left of" | "to the right of" | "above" | "below" | "inside" | "containing" | "near"
                  | "on" | "in" | "beside" | "beneath" | "surrounding"

An indefinite noun phrase creates objects ("three red apples" creates three), a definite one ("the red apple")
refers to an object created earlier. Both sides of a relation clause must be single objects.

For example ``"a green bench and a red car and the red car next to the green bench"``.

Edit instructions
*****************

.. code-block:: text

    Add <np> [ "to the scene" | predicate <the-np> ( "and" predicate <the-np> )* ]
    Remove <the-np> [ locative ]
    Change <the-np> [ locative ] "to" ( value key | <np> )
    Replace <the-np> [ locative ] "with" <np>
    Move <the-np> ( predicate | "away from" ) <the-np>

A locative is a predicate and a definite noun phrase, which may use a possessive part:
``"Replace the cactus on the corgi's head with a tiny apple"``.
"Change ... to ..." is a modify when the noun stays and exactly one attribute changes, and a replace otherwise.
"""

import re
from dataclasses import dataclass
from typing import Optional, Type

from ..core import GrapeRunBasicError, InstructionUnparseableError, SceneGrammarError
from ..log import logger
from .ops import AWAY_FROM, Descriptor, EditKind, EditOp, ObjectSpec, RelationSpec, resolve
from .scene import Relation, Scene, SceneObject, normalize_attributes
from .vocab import (
    COUNT_TO_WORD,
    NOUNS,
    NUMBER_WORDS,
    PARTS,
    PLURAL_TO_NOUN,
    PREDICATE_PHRASES,
    PREFIX_KEYS,
    VALUE_TO_KEY,
    VOCABULARY,
    article,
)

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'s)?|,|\.")


@dataclass(frozen=True)
class _Token:
    text: str
    start: int
    end: int


def _tokenize(text: str) -> list[_Token]:
    normalized = text.lower().replace("’", "'")
    tokens = [_Token(_m.group(0), _m.start(), _m.end()) for _m in _TOKEN_RE.finditer(normalized)]

    while len(tokens) > 0 and tokens[-1].text == ".":
        tokens.pop()

    return tokens


class _TokenStream:
    def __init__(self, text: str, error_class: Type[GrapeRunBasicError]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.error_class = error_class

    def peek(self, offset: int = 0) -> Optional[str]:
        index = self.pos + offset
        return self.tokens[index].text if index < len(self.tokens) else None

    def next(self) -> str:
        token = self.peek()
        if token is None:
            self.fail("unexpected end of text")
        self.pos += 1
        return token  # type: ignore

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def accept(self, *words: str) -> bool:
        if all(self.peek(_index) == _word for _index, _word in enumerate(words)):
            self.pos += len(words)
            return True
        return False

    def expect(self, word: str):
        if not self.accept(word):
            self.fail(f"expected '{word}'")

    def span(self, start: Optional[int] = None) -> tuple[int, int]:
        if len(self.tokens) == 0:
            return 0, 0
        first = self.tokens[min(self.pos if start is None else start, len(self.tokens) - 1)]
        last = self.tokens[min(self.pos, len(self.tokens) - 1)]
        return first.start, max(first.end, last.end)

    def fail(self, reason: str, start: Optional[int] = None):
        span = self.span(start)
        token = self.text[span[0] : span[1]] if len(self.tokens) > 0 else ""
        message = f"Can't parse '{self.text}': {reason} at {span} '{token}'"
        logger.debug(message)
        if self.error_class is SceneGrammarError:
            raise SceneGrammarError(message, span)
        raise self.error_class(message)

    def try_predicate(self) -> Optional[str]:
        for _words, _canonical in PREDICATE_PHRASES:
            if all(self.peek(_index) == _word for _index, _word in enumerate(_words)):
                self.pos += len(_words)
                return _canonical
        return None

    def parse_attributes(self) -> dict[str, str]:
        """
        Prefix adjectives.
        """
        attrs: dict[str, str] = {}
        while self.peek() in VALUE_TO_KEY:
            value = self.next()
            key = VALUE_TO_KEY[value]
            if key in attrs:
                self.fail(f"{key} given twice", self.pos - 1)
            attrs[key] = value
        return attrs

    def parse_suffixes(self, attrs: dict[str, str]):
        """
        "with <value> <key>" and "in <style> style".
        """
        while True:
            value = self.peek(1)
            if self.peek() == "with" and value in VALUE_TO_KEY and self.peek(2) == VALUE_TO_KEY[value]:
                pass
            elif self.peek() == "in" and value in VOCABULARY["style"] and self.peek(2) == "style":
                pass
            else:
                return

            key = VALUE_TO_KEY[value]  # type: ignore
            if key in attrs:
                self.fail(f"{key} given twice")
            attrs[key] = value  # type: ignore
            self.pos += 3

    def parse_noun(self, plural: Optional[bool] = None) -> str:
        token = self.peek()
        if token is not None and token in NOUNS and plural is not True:
            self.pos += 1
            return token
        if token is not None and token in PLURAL_TO_NOUN and plural is not False:
            self.pos += 1
            return PLURAL_TO_NOUN[token]
        self.fail("expected a noun")
        return ""

    def parse_definite(self, allow_locative: bool) -> Descriptor:
        """
        "the" adjectives noun suffixes [locative]; a possessive noun takes a part word ("the corgi's head").
        """
        self.expect("the")
        attrs = self.parse_attributes()

        token = self.peek()
        if token is not None and token.endswith("'s") and token[:-2] in NOUNS:
            self.pos += 1
            noun = token[:-2]
            if self.peek() not in PARTS:
                self.fail("expected a part after a possessive")
            self.pos += 1
        else:
            noun = self.parse_noun()

        self.parse_suffixes(attrs)

        relation = None
        if allow_locative:
            start = self.pos
            predicate = self.try_predicate()
            if predicate is not None:
                if self.peek() != "the":
                    self.pos = start
                else:
                    relation = RelationSpec(predicate, self.parse_definite(allow_locative=False))

        return Descriptor(noun, normalize_attributes(attrs), relation)

    def parse_indefinite(self) -> ObjectSpec:
        """
        "a"/"an"/"one" adjectives noun suffixes.
        """
        if not (self.accept("a") or self.accept("an") or self.accept("one")):
            self.fail("expected 'a' or 'an'")
        attrs = self.parse_attributes()
        noun = self.parse_noun(plural=False)
        self.parse_suffixes(attrs)
        return ObjectSpec(noun, normalize_attributes(attrs))


def _plural_phrase_noun(noun: str, count: int) -> str:
    return noun if count == 1 else NOUNS[noun]


def render_object_phrase(noun: str, attributes, count: int = 1, determiner: Optional[str] = None) -> str:
    """
    Render an object as a noun phrase: size, shape and color before the noun,
    texture and style after it.

    >>> render_object_phrase("duck", {"texture": "metallic"})
    'a duck with metallic texture'

    :param noun: Singular noun.
    :type noun: str
    :param attributes: Mapping or pairs.
    :param count: Number of instances.
    :type count: int
    :param determiner: ``"the"`` for a definite phrase. Defaults to an article or a number word.
    :type determiner: str | None
    :return: Phrase.
    :rtype: str
    """
    attrs = dict(normalize_attributes(attributes))
    words = [attrs[_key] for _key in PREFIX_KEYS if _key in attrs]
    words.append(_plural_phrase_noun(noun, count))

    if "texture" in attrs:
        words.append(f"with {attrs['texture']} texture")
    if "style" in attrs:
        words.append(f"in {attrs['style']} style")

    if determiner is None:
        determiner = article(words[0]) if count == 1 else COUNT_TO_WORD[count]

    return " ".join([determiner] + words)


def _render_descriptor(descriptor: Descriptor) -> str:
    phrase = render_object_phrase(descriptor.noun, descriptor.attributes, determiner="the")
    if descriptor.relation is not None:
        phrase = f"{phrase} {descriptor.relation.predicate} {_render_descriptor(descriptor.relation.anchor)}"
    return phrase


def parse_target_scene(prompt_text: str) -> Scene:
    """
    Parse a target prompt into a scene. Objects get ids ``o1``, ``o2``... in clause order.

    >>> parse_target_scene("a green bench and a duck with metallic texture")

    :param prompt_text: Prompt following the target grammar.
    :type prompt_text: str
    :return: Scene.
    :rtype: Scene
    """
    stream = _TokenStream(prompt_text, SceneGrammarError)
    if stream.at_end():
        stream.fail("empty prompt")

    objects: list[SceneObject] = []
    relations: list[Relation] = []

    def parse_np() -> list[SceneObject]:
        start = stream.pos
        determiner = stream.next()

        if determiner == "the":
            stream.pos -= 1
            descriptor = stream.parse_definite(allow_locative=False)
            found = resolve(Scene(tuple(objects), tuple(relations)), descriptor)
            if found is None:
                stream.fail(f"'{descriptor.noun}' isn't introduced before", start)
            return [found]  # type: ignore

        if determiner in ("a", "an"):
            count = 1
        elif determiner in NUMBER_WORDS:
            count = NUMBER_WORDS[determiner]
        else:
            stream.fail("expected a determiner", start)

        attrs = stream.parse_attributes()
        noun = stream.parse_noun(plural=None if count > 1 else False)
        stream.parse_suffixes(attrs)

        created = []
        for _ in range(count):
            new_object = SceneObject(f"o{len(objects) + 1}", noun, normalize_attributes(attrs))
            objects.append(new_object)
            created.append(new_object)
        return created

    while True:
        clause_start = stream.pos
        subjects = parse_np()

        predicate = stream.try_predicate()
        if predicate is not None:
            others = parse_np()
            if len(subjects) != 1 or len(others) != 1:
                stream.fail("relations need single objects on both sides", clause_start)

            pair = frozenset((subjects[0].id, others[0].id))
            if subjects[0].id == others[0].id or any(_r.pair == pair for _r in relations):
                stream.fail("objects can have at most one relation", clause_start)

            relations.append(Relation(subjects[0].id, predicate, others[0].id))

        if stream.at_end():
            break

        if stream.accept(","):
            stream.accept("and")
        elif not stream.accept("and"):
            stream.fail("expected ',' or 'and'")

    return Scene(tuple(objects), tuple(relations))


def render_target_prompt(scene: Scene) -> str:
    """
    Render a scene as a target prompt that :func:`parse_target_scene` reads back into an equivalent scene.

    Runs of identical objects without relations become counted phrases ("three red apples").
    Related objects should be distinguishable by noun and attributes, otherwise the definite
    phrases of relation clauses may refer to another object.

    :param scene: Scene.
    :type scene: Scene
    :return: Prompt text.
    :rtype: str
    """
    related = {_id for _relation in scene.relations for _id in (_relation.subject, _relation.object)}
    clauses = []

    index = 0
    while index < len(scene.objects):
        current = scene.objects[index]
        count = 1
        if current.id not in related:
            while (
                index + count < len(scene.objects)
                and count < max(COUNT_TO_WORD)
                and scene.objects[index + count].signature == current.signature
                and scene.objects[index + count].id not in related
            ):
                count += 1

        clauses.append(render_object_phrase(current.noun, current.attributes, count))
        index += count

    for _relation in scene.relations:
        subject = Descriptor.of(scene.get(_relation.subject))
        other = Descriptor.of(scene.get(_relation.object))
        clauses.append(f"{_render_descriptor(subject)} {_relation.predicate} {_render_descriptor(other)}")

    return " and ".join(clauses)


def _parse_change_target(stream: _TokenStream, target: Descriptor) -> EditOp:
    value = stream.peek()
    if value in VALUE_TO_KEY and (stream.peek(1) == VALUE_TO_KEY[value] or stream.peek(1) is None):
        stream.pos += 2 if stream.peek(1) is not None else 1
        return EditOp.modify(target, VALUE_TO_KEY[value], value)  # type: ignore

    phrase = stream.parse_indefinite()
    old_attrs = dict(target.attributes)
    new_attrs = dict(phrase.attributes)
    changed = [(_key, _value) for _key, _value in new_attrs.items() if old_attrs.get(_key) != _value]

    if phrase.noun == target.noun and set(old_attrs) <= set(new_attrs) and len(changed) == 1:
        return EditOp.modify(target, changed[0][0], changed[0][1])

    return EditOp.replace(target, phrase)


def parse_edit_instruction(text: str) -> EditOp:
    """
    Parse an edit instruction.

    >>> parse_edit_instruction("Change the pants to khaki color")

    :param text: Instruction text.
    :type text: str
    :return: Operation.
    :rtype: EditOp
    """
    stream = _TokenStream(text, InstructionUnparseableError)
    if stream.at_end():
        stream.fail("empty instruction")

    verb = stream.next()

    match verb:
        case "add":
            phrase = stream.parse_indefinite()
            relations = []
            if not stream.at_end() and not stream.accept("to", "the", "scene"):
                while True:
                    predicate = stream.try_predicate()
                    if predicate is None:
                        stream.fail("expected a spatial predicate")
                    relations.append(RelationSpec(predicate, stream.parse_definite(allow_locative=False)))  # type: ignore
                    if not stream.accept("and"):
                        break
            op = EditOp.add(phrase, relations)

        case "remove":
            op = EditOp.remove(stream.parse_definite(allow_locative=True))

        case "change":
            target = stream.parse_definite(allow_locative=True)
            stream.expect("to")
            op = _parse_change_target(stream, target)

        case "replace":
            target = stream.parse_definite(allow_locative=True)
            stream.expect("with")
            op = EditOp.replace(target, stream.parse_indefinite())

        case "move":
            target = stream.parse_definite(allow_locative=False)
            if stream.accept("away", "from"):
                predicate = AWAY_FROM
            else:
                predicate = stream.try_predicate()
                if predicate is None:
                    stream.fail("expected a spatial predicate or 'away from'")
            op = EditOp.move(target, predicate, stream.parse_definite(allow_locative=False))  # type: ignore

        case _:
            stream.fail("unknown verb", 0)
            raise AssertionError("unreachable")

    if not stream.at_end():
        stream.fail("unexpected trailing words")

    return op


def render_instruction(op: EditOp) -> str:
    """
    Render an operation as an instruction that :func:`parse_edit_instruction` reads back into an equal operation.

    :param op: Operation.
    :type op: EditOp
    :return: Instruction text.
    :rtype: str
    """
    match op.kind:
        case EditKind.ADD:
            phrase = render_object_phrase(op.new_object.noun, op.new_object.attributes)  # type: ignore
            if len(op.relations) == 0:
                return f"Add {phrase} to the scene"
            where = " and ".join(f"{_spec.predicate} {_render_descriptor(_spec.anchor)}" for _spec in op.relations)
            return f"Add {phrase} {where}"

        case EditKind.REMOVE:
            return f"Remove {_render_descriptor(op.target)}"  # type: ignore

        case EditKind.MODIFY if op.is_spatial:
            predicate = op.attribute[1]  # type: ignore
            return f"Move {_render_descriptor(op.target)} {predicate} {_render_descriptor(op.anchor)}"  # type: ignore

        case EditKind.MODIFY:
            key, value = op.attribute  # type: ignore
            target = op.target
            # a full phrase equal to the target would read back as a replace
            if dict(target.attributes).get(key, value) == value:  # type: ignore
                return f"Change {_render_descriptor(target)} to {value} {key}"  # type: ignore
            new_attrs = dict(target.attributes)  # type: ignore
            new_attrs[key] = value
            return f"Change {_render_descriptor(target)} to {render_object_phrase(target.noun, new_attrs)}"  # type: ignore

        case EditKind.REPLACE:
            phrase = render_object_phrase(op.new_object.noun, op.new_object.attributes)  # type: ignore
            return f"Replace {_render_descriptor(op.target)} with {phrase}"  # type: ignore

    logger.error(f"Unknown edit kind: {op.kind}")
    raise InstructionUnparseableError(f"Unknown edit kind: {op.kind}")


__all__ = [
    "parse_target_scene",
    "render_target_prompt",
    "parse_edit_instruction",
    "render_instruction",
    "render_object_phrase",
]
