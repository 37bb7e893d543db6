"""
graperun.simworld.scene
#######################

.. autosummary::
    :toctree: generated/

    SceneObject
    Relation
    Scene
    serialize_scene
    deserialize_scene
    scenes_equivalent

A scene is a list of objects with attributes plus spatial relations between them.
It stands in for an image: the simulated generator "draws" scenes and the simulated editor edits them.

Scenes serialize to a canonical text, one line per object in list order followed by the relations sorted:

.. code-block:: text

    object o1 bench color=green
    object o2 duck texture=metallic
    relation o2 next to o1

Two scenes serialize to the same bytes iff they have the same objects in the same order and the same relations,
so the serialization can be content-addressed.
"""

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from ..core import PreconditionError
from ..log import logger
from .vocab import ATTRIBUTE_KEYS, INVERSE_PREDICATES, canonical_predicate, inverse_predicate

Signature = tuple[str, tuple[tuple[str, str], ...]]


def normalize_attributes(attributes: Mapping[str, str] | Iterable[tuple[str, str]]) -> tuple[tuple[str, str], ...]:
    """
    Sort attributes by key into a hashable tuple.

    :param attributes: Mapping or pairs.
    :return: Sorted pairs.
    :rtype: tuple
    """
    pairs = dict(attributes.items() if isinstance(attributes, Mapping) else attributes)
    return tuple(sorted(pairs.items()))


@dataclass(frozen=True)
class SceneObject:
    """
    An object of a scene. ``attributes`` are sorted ``(key, value)`` pairs.
    """

    id: str
    noun: str
    attributes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.noun == "" or self.id == "":
            logger.error(f"Scene object needs an id and a noun, got ('{self.id}', '{self.noun}')")
            raise PreconditionError(f"Scene object needs an id and a noun, got ('{self.id}', '{self.noun}')")

        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))

        for _key, _ in self.attributes:
            if _key not in ATTRIBUTE_KEYS:
                logger.error(f"Unknown attribute key '{_key}' of object '{self.id}'")
                raise PreconditionError(f"Unknown attribute key '{_key}' of object '{self.id}'")

    @property
    def attrs(self) -> dict[str, str]:
        return dict(self.attributes)

    @property
    def signature(self) -> Signature:
        """
        Noun and attributes, without the id.
        """
        return self.noun, self.attributes

    def with_attribute(self, key: str, value: str) -> "SceneObject":
        attrs = self.attrs
        attrs[key] = value
        return replace(self, attributes=normalize_attributes(attrs))


@dataclass(frozen=True)
class Relation:
    """
    ``subject`` is ``predicate`` ``object``, for example ``o2 next to o1``.
    """

    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        predicate = canonical_predicate(self.predicate)
        if predicate not in INVERSE_PREDICATES:
            logger.error(f"Unknown spatial predicate '{self.predicate}'")
            raise PreconditionError(f"Unknown spatial predicate '{self.predicate}'")

        if self.subject == self.object:
            logger.error(f"Object '{self.subject}' can't be related to itself.")
            raise PreconditionError(f"Object '{self.subject}' can't be related to itself.")

        object.__setattr__(self, "predicate", predicate)

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.subject, self.object))

    def involves(self, object_id: str) -> bool:
        return object_id in (self.subject, self.object)

    def oriented_from(self, object_id: str) -> "Relation":
        """
        Same relation with ``object_id`` as subject.

        :param object_id: One of the endpoints.
        :type object_id: str
        :return: Relation.
        :rtype: Relation
        """
        if object_id == self.subject:
            return self
        return Relation(self.object, inverse_predicate(self.predicate), self.subject)


@dataclass(frozen=True)
class Scene:
    """
    Objects and the relations between them.

    Invariants: object ids are unique, relations reference existing objects,
    and every unordered pair of objects has at most one relation.
    """

    objects: tuple[SceneObject, ...] = ()
    relations: tuple[Relation, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "relations", tuple(self.relations))

        ids = [_object.id for _object in self.objects]
        if len(set(ids)) != len(ids):
            logger.error(f"Scene has duplicated object ids: {ids}")
            raise PreconditionError(f"Scene has duplicated object ids: {ids}")

        id_set = set(ids)
        pairs = set()
        for _relation in self.relations:
            if _relation.subject not in id_set or _relation.object not in id_set:
                logger.error(f"Relation references unknown object: {_relation}")
                raise PreconditionError(f"Relation references unknown object: {_relation}")

            if _relation.pair in pairs:
                logger.error(f"Objects {sorted(_relation.pair)} have more than one relation.")
                raise PreconditionError(f"Objects {sorted(_relation.pair)} have more than one relation.")
            pairs.add(_relation.pair)

    def get(self, object_id: str) -> SceneObject:
        for _object in self.objects:
            if _object.id == object_id:
                return _object

        logger.error(f"Unknown object id '{object_id}'")
        raise KeyError(f"Unknown object id '{object_id}'")

    def relation_between(self, first: str, second: str) -> Optional[Relation]:
        """
        The relation between two objects, oriented from ``first``.

        :param first: Object id.
        :type first: str
        :param second: Object id.
        :type second: str
        :return: Relation or ``None``.
        :rtype: Relation | None
        """
        pair = frozenset((first, second))
        for _relation in self.relations:
            if _relation.pair == pair:
                return _relation.oriented_from(first)
        return None

    def relations_of(self, object_id: str) -> list[Relation]:
        """
        Relations involving an object, oriented from it.
        """
        return [_relation.oriented_from(object_id) for _relation in self.relations if _relation.involves(object_id)]

    def next_id(self) -> str:
        """
        An unused object id.

        :return: ``o<n>`` with ``n`` one larger than any numeric id in use.
        :rtype: str
        """
        numbers = [int(_object.id[1:]) for _object in self.objects if _object.id[:1] == "o" and _object.id[1:].isdigit()]
        return f"o{max(numbers, default=0) + 1}"


def serialize_scene(scene: Scene) -> bytes:
    """
    Canonical text form of a scene.

    :param scene: Scene.
    :type scene: Scene
    :return: UTF-8 bytes.
    :rtype: bytes
    """
    lines = []
    for _object in scene.objects:
        attrs = "".join(f" {_key}={_value}" for _key, _value in _object.attributes)
        lines.append(f"object {_object.id} {_object.noun}{attrs}")

    for _relation in sorted(scene.relations, key=lambda _r: (_r.subject, _r.predicate, _r.object)):
        lines.append(f"relation {_relation.subject} {_relation.predicate} {_relation.object}")

    return ("\n".join(lines) + "\n").encode("utf-8") if len(lines) > 0 else b""


def deserialize_scene(payload: bytes | str) -> Scene:
    """
    Read a scene written by :func:`serialize_scene`.

    :param payload: Bytes or text.
    :return: Scene.
    :rtype: Scene
    """
    text = payload.decode("utf-8") if isinstance(payload, bytes) else payload

    objects = []
    relations = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if len(tokens) == 0:
            continue

        if tokens[0] == "object" and len(tokens) >= 3:
            try:
                attributes = [tuple(_token.split("=", 1)) for _token in tokens[3:]]
                objects.append(SceneObject(tokens[1], tokens[2], normalize_attributes(attributes)))  # type: ignore
                continue
            except ValueError:
                pass

        elif tokens[0] == "relation" and len(tokens) >= 4:
            relations.append(Relation(tokens[1], " ".join(tokens[2:-1]), tokens[-1]))
            continue

        logger.error(f"Can't parse line {line_no} of scene: '{line}'")
        raise PreconditionError(f"Can't parse line {line_no} of scene: '{line}'")

    return Scene(tuple(objects), tuple(relations))


def _relation_key(scene: Scene, relation: Relation) -> tuple:
    subject = scene.get(relation.subject).signature
    obj = scene.get(relation.object).signature
    return min((subject, relation.predicate, obj), (obj, inverse_predicate(relation.predicate), subject))


def canonical_form(scene: Scene) -> tuple[Counter, Counter]:
    """
    Multisets of object signatures and of relations between signatures.
    Ids and list order don't take part.

    :param scene: Scene.
    :type scene: Scene
    :return: ``(objects, relations)`` counters.
    :rtype: tuple
    """
    return (
        Counter(_object.signature for _object in scene.objects),
        Counter(_relation_key(scene, _relation) for _relation in scene.relations),
    )


def scenes_equivalent(first: Scene, second: Scene) -> bool:
    """
    Check if two scenes are equal up to object ids and list order.

    :param first: Scene.
    :type first: Scene
    :param second: Scene.
    :type second: Scene
    :return: True or False.
    :rtype: bool
    """
    return canonical_form(first) == canonical_form(second)


__all__ = [
    "Signature",
    "normalize_attributes",
    "SceneObject",
    "Relation",
    "Scene",
    "serialize_scene",
    "deserialize_scene",
    "canonical_form",
    "scenes_equivalent",
]
