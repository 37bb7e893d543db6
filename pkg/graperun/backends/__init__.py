"""
graperun.backends
#################

Generator, editor, chat-vision and VQA backends.

Submodules
**********

======================================== ========================================================
:doc:`base </api/backends.base>`         Backend contracts and chat message types.
:doc:`config </api/backends.config>`     ``BackendConfig``.
:doc:`cache </api/backends.cache>`       On-disk response cache.
:doc:`http </api/backends.http>`         HTTP backends and their wire format.
:doc:`vqa </api/backends.vqa>`           Binary question answering over a chat backend.
:doc:`factory </api/backends.factory>`   Build the backends a config file asks for.
======================================== ========================================================

``factory`` depends on :doc:`simworld </api/simworld>` and isn't imported here.

.. toctree::
    :maxdepth: 1
    :hidden:

    base <backends.base>
    config <backends.config>
    cache <backends.cache>
    http <backends.http>
    vqa <backends.vqa>
    factory <backends.factory>
"""

from .base import *
from .cache import *
from .config import *
from .http import *
from .vqa import *
