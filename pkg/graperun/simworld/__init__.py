"""
graperun.simworld
#################

A small symbolic world where images are scene graphs. It stands in for the generator, the editor, the planner and
the question answering model, so the whole generate-plan-edit loop can be checked without any model.

Submodules
**********

======================================== ========================================================
:doc:`vocab </api/simworld.vocab>`       Nouns, attribute values and spatial predicates.
:doc:`scene </api/simworld.scene>`       Scenes and their canonical serialization.
:doc:`ops </api/simworld.ops>`           Edit operations and how they change scenes.
:doc:`grammar </api/simworld.grammar>`   Target prompt and edit instruction grammars.
:doc:`noise </api/simworld.noise>`       Seeded scene degradation.
:doc:`oracle </api/simworld.oracle>`     Planner diffing target and current scenes.
:doc:`generate </api/simworld.generate>` Random targets, questions and predicate evaluation.
:doc:`backends </api/simworld.backends>` Backend implementations over scenes.
======================================== ========================================================

``backends`` isn't imported here, import it from ``graperun.simworld.backends``.

.. toctree::
    :maxdepth: 1
    :hidden:

    vocab <simworld.vocab>
    scene <simworld.scene>
    ops <simworld.ops>
    grammar <simworld.grammar>
    noise <simworld.noise>
    oracle <simworld.oracle>
    generate <simworld.generate>
    backends <simworld.backends>
"""

from .generate import *
from .grammar import *
from .noise import *
from .ops import *
from .oracle import *
from .scene import *
from .vocab import *
