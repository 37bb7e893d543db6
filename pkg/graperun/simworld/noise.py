"""
graperun.simworld.noise
#######################

.. autosummary::
    :toctree: generated/

    Fault
    degrade
    degrade_with_faults

Seeded degradation of scenes, used by the simulated generator to make the mistakes a text-to-image model makes.

Every object is visited in list order and, with probability ``rate``, gets one fault chosen uniformly among the
ones that apply to it:

* ``drop``: the object and its relations disappear.
* ``corrupt``: one attribute takes another value of the same key.
* ``rewire``: one relation of the object gets another predicate.

The same scene, rate and seed always give the same result.
"""

import random
from dataclasses import dataclass, replace

from ..core import PreconditionError
from ..log import logger
from .scene import Relation, Scene
from .vocab import PREDICATES, VOCABULARY

FAULT_KINDS = ("drop", "corrupt", "rewire")


@dataclass(frozen=True)
class Fault:
    """
    A fault injected into a scene.
    """

    kind: str
    object_id: str
    detail: str = ""


def _check_rate(rate: float):
    if not 0.0 <= rate <= 1.0:
        logger.error(f"Degradation rate should be in [0, 1], got {rate}")
        raise PreconditionError(f"Degradation rate should be in [0, 1], got {rate}")


def degrade_with_faults(scene: Scene, rate: float, seed: int) -> tuple[Scene, list[Fault]]:
    """
    Degrade a scene and report what was changed.

    :param scene: Scene to degrade.
    :type scene: Scene
    :param rate: Fault probability per object, in ``[0, 1]``.
    :type rate: float
    :param seed: Random seed.
    :type seed: int
    :return: ``(scene, faults)``.
    :rtype: tuple
    """
    _check_rate(rate)
    if rate <= 0.0 or len(scene.objects) == 0:
        return scene, []

    rng = random.Random(seed)
    faults: list[Fault] = []

    for _original in scene.objects:
        if rng.random() >= rate:
            continue

        # earlier faults may have dropped or changed this object
        if _original.id not in {_o.id for _o in scene.objects}:
            continue
        current = scene.get(_original.id)

        signatures = {_o.signature for _o in scene.objects if _o.id != current.id}
        corruptions = []
        for _key, _value in current.attributes:
            for _other in VOCABULARY[_key]:
                candidate = current.with_attribute(_key, _other)
                if _other != _value and candidate.signature not in signatures:
                    corruptions.append((_key, _other))

        incident = [_r for _r in scene.relations if _r.involves(current.id)]

        choices = ["drop"]
        if len(corruptions) > 0:
            choices.append("corrupt")
        if len(incident) > 0:
            choices.append("rewire")

        match rng.choice(choices):
            case "drop":
                scene = Scene(
                    tuple(_o for _o in scene.objects if _o.id != current.id),
                    tuple(_r for _r in scene.relations if not _r.involves(current.id)),
                )
                faults.append(Fault("drop", current.id))

            case "corrupt":
                key, value = rng.choice(corruptions)
                new_object = current.with_attribute(key, value)
                scene = replace(scene, objects=tuple(new_object if _o.id == current.id else _o for _o in scene.objects))
                faults.append(Fault("corrupt", current.id, f"{key}={value}"))

            case "rewire":
                relation = rng.choice(incident)
                predicate = rng.choice([_p for _p in PREDICATES if _p != relation.predicate])
                new_relation = Relation(relation.subject, predicate, relation.object)
                scene = replace(scene, relations=tuple(new_relation if _r == relation else _r for _r in scene.relations))
                faults.append(Fault("rewire", current.id, f"{relation.subject} {predicate} {relation.object}"))

    logger.debug(f"Degraded scene with {len(faults)} faults: {faults}")
    return scene, faults


def degrade(scene: Scene, rate: float, seed: int) -> Scene:
    """
    Degrade a scene, see :func:`degrade_with_faults`.

    :param scene: Scene to degrade.
    :type scene: Scene
    :param rate: Fault probability per object, in ``[0, 1]``.
    :type rate: float
    :param seed: Random seed.
    :type seed: int
    :return: Degraded scene.
    :rtype: Scene
    """
    return degrade_with_faults(scene, rate, seed)[0]


__all__ = ["FAULT_KINDS", "Fault", "degrade", "degrade_with_faults"]
