"""
graperun.simworld.ops
#####################

.. autosummary::
    :toctree: generated/

    EditKind
    Descriptor
    RelationSpec
    ObjectSpec
    EditOp
    resolve
    apply_edit

Atomic edit operations over scenes.

Objects are addressed by :class:`Descriptor`: a noun, an attribute filter and optionally a locative
("the cactus on top of the corgi"). When several objects match, an object whose attributes equal the filter
exactly is preferred, then the first one in list order.

Relation fixes are modifies of the ``spatial`` concept: ``attribute = ("spatial", predicate)`` relates the
target to ``anchor``, ``attribute = ("spatial", "away from")`` removes their relation.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

from ..core import PreconditionError, TargetNotFoundError
from ..log import logger
from .scene import Relation, Scene, SceneObject, normalize_attributes
from .vocab import ATTRIBUTE_KEYS, INVERSE_PREDICATES, canonical_predicate

SPATIAL_KEY = "spatial"
AWAY_FROM = "away from"


class EditKind(str, Enum):
    """
    Kind of an edit operation.
    """

    ADD = "add"
    REMOVE = "remove"
    MODIFY = "modify"
    REPLACE = "replace"


@dataclass(frozen=True)
class RelationSpec:
    """
    A relation to an anchor object, seen from the object being described or added.
    """

    predicate: str
    anchor: "Descriptor"

    def __post_init__(self):
        object.__setattr__(self, "predicate", canonical_predicate(self.predicate))


@dataclass(frozen=True)
class Descriptor:
    """
    How an instruction refers to an existing object.
    """

    noun: str
    attributes: tuple[tuple[str, str], ...] = ()
    relation: Optional[RelationSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))

    @classmethod
    def of(cls, scene_object: SceneObject) -> "Descriptor":
        """
        Descriptor naming every attribute of an object.
        """
        return cls(scene_object.noun, scene_object.attributes)


@dataclass(frozen=True)
class ObjectSpec:
    """
    Noun and attributes of an object to be created.
    """

    noun: str
    attributes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))

    @classmethod
    def of(cls, scene_object: SceneObject) -> "ObjectSpec":
        return cls(scene_object.noun, scene_object.attributes)


def _check(condition: bool, message: str):
    if not condition:
        logger.error(message)
        raise PreconditionError(message)


@dataclass(frozen=True)
class EditOp:
    """
    One atomic edit.

    ========== ============================================================================
    kind       fields
    ========== ============================================================================
    add        ``new_object``, optional ``relations`` to anchors
    remove     ``target``
    modify     ``target``, ``attribute``; ``anchor`` too when the attribute is spatial
    replace    ``target``, ``new_object``; the target keeps its id and relations
    ========== ============================================================================
    """

    kind: EditKind
    target: Optional[Descriptor] = None
    new_object: Optional[ObjectSpec] = None
    relations: tuple[RelationSpec, ...] = ()
    attribute: Optional[tuple[str, str]] = None
    anchor: Optional[Descriptor] = None

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(self.relations))

        match self.kind:
            case EditKind.ADD:
                _check(self.target is None and self.new_object is not None, "Add needs a new object and no target.")
                _check(self.attribute is None and self.anchor is None, "Add carries no attribute change.")
                _check(all(_spec.anchor.relation is None for _spec in self.relations), "Add anchors can't have locatives.")

            case EditKind.REMOVE:
                _check(self.target is not None, "Remove needs a target.")
                _check(
                    self.new_object is None and self.attribute is None and len(self.relations) == 0, "Remove carries no payload."
                )

            case EditKind.MODIFY:
                _check(self.target is not None and self.attribute is not None, "Modify needs a target and one attribute change.")
                _check(self.new_object is None and len(self.relations) == 0, "Modify carries no new object.")
                key, value = self.attribute  # type: ignore
                if key == SPATIAL_KEY:
                    _check(self.anchor is not None, "Spatial modify needs an anchor.")
                    _check(value == AWAY_FROM or value in INVERSE_PREDICATES, f"Unknown spatial predicate '{value}'.")
                    no_locatives = self.target.relation is None and self.anchor.relation is None  # type: ignore
                    _check(no_locatives, "Spatial modify can't use locatives.")
                else:
                    _check(key in ATTRIBUTE_KEYS, f"Unknown attribute key '{key}'.")
                    _check(self.anchor is None, "Only spatial modify has an anchor.")

            case EditKind.REPLACE:
                _check(self.target is not None and self.new_object is not None, "Replace needs a target and a new object.")
                _check(
                    self.attribute is None and self.anchor is None and len(self.relations) == 0,
                    "Replace carries no attribute change.",
                )

    @property
    def is_spatial(self) -> bool:
        return self.kind is EditKind.MODIFY and self.attribute is not None and self.attribute[0] == SPATIAL_KEY

    @classmethod
    def add(cls, new_object: ObjectSpec, relations: Iterable[RelationSpec] = ()) -> "EditOp":
        return cls(EditKind.ADD, new_object=new_object, relations=tuple(relations))

    @classmethod
    def remove(cls, target: Descriptor) -> "EditOp":
        return cls(EditKind.REMOVE, target=target)

    @classmethod
    def modify(cls, target: Descriptor, key: str, value: str) -> "EditOp":
        return cls(EditKind.MODIFY, target=target, attribute=(key, value))

    @classmethod
    def move(cls, target: Descriptor, predicate: str, anchor: Descriptor) -> "EditOp":
        predicate = predicate if predicate == AWAY_FROM else canonical_predicate(predicate)
        return cls(EditKind.MODIFY, target=target, attribute=(SPATIAL_KEY, predicate), anchor=anchor)

    @classmethod
    def replace(cls, target: Descriptor, new_object: ObjectSpec) -> "EditOp":
        return cls(EditKind.REPLACE, target=target, new_object=new_object)


def matches(scene: Scene, scene_object: SceneObject, descriptor: Descriptor) -> bool:
    """
    Check if an object fits a descriptor: same noun, every filtered attribute equal, and the locative holds.

    :param scene: Scene containing the object.
    :type scene: Scene
    :param scene_object: Object.
    :type scene_object: SceneObject
    :param descriptor: Descriptor.
    :type descriptor: Descriptor
    :return: True or False.
    :rtype: bool
    """
    if scene_object.noun != descriptor.noun:
        return False

    attrs = scene_object.attrs
    if any(attrs.get(_key) != _value for _key, _value in descriptor.attributes):
        return False

    if descriptor.relation is None:
        return True

    for _relation in scene.relations_of(scene_object.id):
        if _relation.predicate == descriptor.relation.predicate and matches(
            scene, scene.get(_relation.object), descriptor.relation.anchor
        ):
            return True

    return False


def resolve(scene: Scene, descriptor: Descriptor, exclude: Iterable[str] = ()) -> Optional[SceneObject]:
    """
    Find the object a descriptor refers to.

    :param scene: Scene.
    :type scene: Scene
    :param descriptor: Descriptor.
    :type descriptor: Descriptor
    :param exclude: Ids that can't be chosen.
    :type exclude: Iterable[str]
    :return: The object, or ``None``.
    :rtype: SceneObject | None
    """
    exclude = set(exclude)
    candidates = [_o for _o in scene.objects if _o.id not in exclude and matches(scene, _o, descriptor)]
    exact = [_o for _o in candidates if _o.attributes == descriptor.attributes]

    if len(exact) > 0:
        return exact[0]
    if len(candidates) > 0:
        return candidates[0]
    return None


def _require(scene: Scene, descriptor: Descriptor, exclude: Iterable[str] = ()) -> SceneObject:
    found = resolve(scene, descriptor, exclude)
    if found is None:
        logger.error(f"No object matches '{descriptor.noun}' {dict(descriptor.attributes)}")
        raise TargetNotFoundError(f"No object matches '{descriptor.noun}' {dict(descriptor.attributes)}")
    return found


def _swap_object(scene: Scene, new_object: SceneObject) -> Scene:
    objects = tuple(new_object if _o.id == new_object.id else _o for _o in scene.objects)
    return replace(scene, objects=objects)


def apply_edit(scene: Scene, op: EditOp) -> Scene:
    """
    Apply an edit operation.

    :param scene: Scene.
    :type scene: Scene
    :param op: Operation.
    :type op: EditOp
    :return: New scene. The input is unchanged.
    :rtype: Scene
    """
    match op.kind:
        case EditKind.ADD:
            new_id = scene.next_id()
            new_object = SceneObject(new_id, op.new_object.noun, op.new_object.attributes)  # type: ignore
            used = {new_id}
            relations = list(scene.relations)

            for _spec in op.relations:
                anchor = _require(scene, _spec.anchor, used)
                used.add(anchor.id)
                relations.append(Relation(new_id, _spec.predicate, anchor.id))

            return Scene(scene.objects + (new_object,), tuple(relations))

        case EditKind.REMOVE:
            target = _require(scene, op.target)  # type: ignore
            return Scene(
                tuple(_o for _o in scene.objects if _o.id != target.id),
                tuple(_r for _r in scene.relations if not _r.involves(target.id)),
            )

        case EditKind.MODIFY if op.is_spatial:
            target = _require(scene, op.target)  # type: ignore
            anchor = _require(scene, op.anchor, {target.id})  # type: ignore
            pair = frozenset((target.id, anchor.id))
            relations = [_r for _r in scene.relations if _r.pair != pair]

            predicate = op.attribute[1]  # type: ignore
            if predicate != AWAY_FROM:
                relations.append(Relation(target.id, predicate, anchor.id))

            return Scene(scene.objects, tuple(relations))

        case EditKind.MODIFY:
            target = _require(scene, op.target)  # type: ignore
            key, value = op.attribute  # type: ignore
            return _swap_object(scene, target.with_attribute(key, value))

        case EditKind.REPLACE:
            target = _require(scene, op.target)  # type: ignore
            return _swap_object(scene, SceneObject(target.id, op.new_object.noun, op.new_object.attributes))  # type: ignore

    logger.error(f"Unknown edit kind: {op.kind}")
    raise PreconditionError(f"Unknown edit kind: {op.kind}")


__all__ = [
    "SPATIAL_KEY",
    "AWAY_FROM",
    "EditKind",
    "RelationSpec",
    "Descriptor",
    "ObjectSpec",
    "EditOp",
    "matches",
    "resolve",
    "apply_edit",
]
