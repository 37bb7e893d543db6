"""
graperun.simworld.oracle
########################

.. autosummary::
    :toctree: generated/

    match_objects
    next_edit
    oracle_ops
    oracle_plan

A planner that knows both the target scene and the current one, and emits the edits turning one into the other.

Edits come in four phases, and objects are matched again after each edit:

1. Remove objects the target doesn't have.
2. Add missing objects in target order, together with their relations to objects already present.
3. Fix attributes: a single differing attribute is a modify, anything else a replace.
4. Fix relations with spatial modifies, "away from" for relations the target doesn't have.

Adding before fixing attributes keeps the per-step question score from dropping,
because an added object never makes a satisfied question fail.
"""

from dataclasses import dataclass, field
from typing import Optional

from ..log import logger
from ..model import EditPlan, PlanSource
from .grammar import render_instruction
from .ops import AWAY_FROM, Descriptor, EditOp, ObjectSpec, RelationSpec, apply_edit, resolve
from .scene import Scene, SceneObject, scenes_equivalent


@dataclass
class ObjectMatching:
    """
    Matching between target and current objects. ``pairs`` maps target ids to current ids.
    """

    pairs: dict[str, str] = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)
    extra: list[str] = field(default_factory=list)


def _overlap(first: SceneObject, second: SceneObject) -> int:
    return len(set(first.attributes) & set(second.attributes))


def match_objects(target: Scene, current: Scene) -> ObjectMatching:
    """
    Match objects of two scenes.

    Passes, each over what earlier passes left: equal id and signature, equal id and noun, equal signature,
    equal noun with the largest attribute overlap, and finally leftovers in list order.

    :param target: Target scene.
    :type target: Scene
    :param current: Current scene.
    :type current: Scene
    :return: Matching.
    :rtype: ObjectMatching
    """
    pairs: dict[str, str] = {}
    used: set[str] = set()

    def free_targets():
        return [_t for _t in target.objects if _t.id not in pairs]

    def free_currents():
        return [_c for _c in current.objects if _c.id not in used]

    def pair(target_object: SceneObject, current_object: SceneObject):
        pairs[target_object.id] = current_object.id
        used.add(current_object.id)

    for _rule in (
        lambda _t, _c: _t.id == _c.id and _t.signature == _c.signature,
        lambda _t, _c: _t.id == _c.id and _t.noun == _c.noun,
        lambda _t, _c: _t.signature == _c.signature,
    ):
        for _target in free_targets():
            for _current in free_currents():
                if _rule(_target, _current):
                    pair(_target, _current)
                    break

    for _target in free_targets():
        candidates = [_c for _c in free_currents() if _c.noun == _target.noun]
        if len(candidates) > 0:
            pair(_target, max(candidates, key=lambda _c: _overlap(_target, _c)))

    for _target, _current in zip(free_targets(), free_currents()):
        pair(_target, _current)

    return ObjectMatching(
        pairs=pairs,
        missing=[_t.id for _t in free_targets()],
        extra=[_c.id for _c in free_currents()],
    )


def _describe(scene: Scene, scene_object: SceneObject, allow_locative: bool = True) -> Descriptor:
    """
    Descriptor resolving to ``scene_object``, with a locative when noun and attributes are ambiguous.
    """
    descriptor = Descriptor.of(scene_object)
    found = resolve(scene, descriptor)
    if found is None or found.id == scene_object.id or not allow_locative:
        return descriptor

    for _relation in scene.relations_of(scene_object.id):
        anchor = scene.get(_relation.object)
        candidate = Descriptor(
            scene_object.noun, scene_object.attributes, RelationSpec(_relation.predicate, Descriptor.of(anchor))
        )
        found = resolve(scene, candidate)
        if found is not None and found.id == scene_object.id:
            return candidate

    return descriptor


def _attribute_edit(current: Scene, target_object: SceneObject, current_object: SceneObject) -> Optional[EditOp]:
    if target_object.signature == current_object.signature:
        return None

    descriptor = _describe(current, current_object)
    target_attrs = target_object.attrs
    current_attrs = current_object.attrs
    changed = [_key for _key, _value in target_attrs.items() if current_attrs.get(_key) != _value]

    if target_object.noun == current_object.noun and set(current_attrs) <= set(target_attrs) and len(changed) == 1:
        return EditOp.modify(descriptor, changed[0], target_attrs[changed[0]])

    return EditOp.replace(descriptor, ObjectSpec.of(target_object))


def next_edit(target: Scene, current: Scene) -> Optional[EditOp]:
    """
    The next edit bringing ``current`` closer to ``target``.

    :param target: Target scene.
    :type target: Scene
    :param current: Current scene.
    :type current: Scene
    :return: Operation, or ``None`` if the scenes are equivalent.
    :rtype: EditOp | None
    """
    if scenes_equivalent(target, current):
        return None

    matching = match_objects(target, current)

    # 1. removes
    if len(matching.extra) > 0:
        return EditOp.remove(_describe(current, current.get(matching.extra[0])))

    # 2. adds
    if len(matching.missing) > 0:
        new_object = target.get(matching.missing[0])
        specs = []
        for _relation in target.relations_of(new_object.id):
            if _relation.object in matching.pairs:
                anchor = current.get(matching.pairs[_relation.object])
                specs.append(RelationSpec(_relation.predicate, Descriptor.of(anchor)))
        return EditOp.add(ObjectSpec.of(new_object), specs)

    # 3. attributes, preferring edits whose descriptor resolves without a locative
    edits = []
    for _target in target.objects:
        current_object = current.get(matching.pairs[_target.id])
        op = _attribute_edit(current, _target, current_object)
        if op is not None:
            edits.append(op)

    if len(edits) > 0:
        return min(edits, key=lambda _op: _op.target.relation is not None)  # type: ignore

    # 4. relations
    for _relation in target.relations:
        subject = current.get(matching.pairs[_relation.subject])
        anchor = current.get(matching.pairs[_relation.object])
        existing = current.relation_between(subject.id, anchor.id)
        if existing is None or existing.predicate != _relation.predicate:
            return EditOp.move(Descriptor.of(subject), _relation.predicate, Descriptor.of(anchor))

    reverse = {_current: _target for _target, _current in matching.pairs.items()}
    for _relation in current.relations:
        if target.relation_between(reverse[_relation.subject], reverse[_relation.object]) is None:
            subject = current.get(_relation.subject)
            anchor = current.get(_relation.object)
            return EditOp.move(Descriptor.of(subject), AWAY_FROM, Descriptor.of(anchor))

    logger.warning("Scenes aren't equivalent but no edit was found, check object descriptors.")
    return None


def oracle_ops(target: Scene, current: Scene) -> list[EditOp]:
    """
    Edits turning ``current`` into ``target``, simulated one by one on a copy.

    :param target: Target scene.
    :type target: Scene
    :param current: Current scene.
    :type current: Scene
    :return: Operations in order.
    :rtype: list
    """
    ops: list[EditOp] = []
    # every edit fixes an object or a relation, more edits mean a descriptor keeps missing
    limit = 2 * (len(target.objects) + len(current.objects) + len(target.relations) + len(current.relations)) + 2

    working = current
    while len(ops) <= limit:
        op = next_edit(target, working)
        if op is None:
            return ops

        ops.append(op)
        working = apply_edit(working, op)

    logger.warning(f"Oracle planner gave up after {len(ops)} edits.")
    return ops


def oracle_plan(target: Scene, current: Scene) -> EditPlan:
    """
    Edit plan turning ``current`` into ``target``. The plan is empty iff the scenes are equivalent.

    >>> oracle_plan(parse_target_scene("a pink apple"), parse_target_scene("a red apple")).texts
    ['Change the red apple to a pink apple']

    :param target: Target scene.
    :type target: Scene
    :param current: Current scene.
    :type current: Scene
    :return: Plan with ``source = oracle``; every step carries its parsed operation.
    :rtype: EditPlan
    """
    ops = oracle_ops(target, current)
    return EditPlan.from_texts([render_instruction(_op) for _op in ops], PlanSource.ORACLE, parsed_ops=ops)


__all__ = ["ObjectMatching", "match_objects", "next_edit", "oracle_ops", "oracle_plan"]
