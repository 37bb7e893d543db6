"""
graperun.utils
##############

.. autosummary::
    :toctree: generated/

    check_path
    derive_seed
    dump_canonical_json

Utility submodule.
"""

import hashlib
import json
from os import makedirs
from os.path import exists
from shutil import rmtree
from typing import Any


def check_path(*args, force=False):
    """
    Check and create all the path in args.

    :param args: Path list.
    :type args: list[str]
    :param force: If ``True``, delete existed directory and create a new.
    :type force: bool
    """
    for _path in args:
        if exists(_path) and force:
            rmtree(_path)
        if not exists(_path):
            makedirs(_path, exist_ok=True)


def derive_seed(*parts: Any) -> int:
    """
    Derive a stable 32-bit seed from arbitrary parts.

    Python's ``hash`` is salted per process, so it can't be used for reproducible seeds.

    :param parts: Values converted with ``str``.
    :return: Seed in ``[0, 2**32)``.
    :rtype: int
    """
    digest = hashlib.sha256("\x1f".join(str(_part) for _part in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def dump_canonical_json(obj: Any) -> bytes:
    """
    Serialize ``obj`` to canonical JSON bytes: sorted keys, no insignificant whitespace, UTF-8.

    Two equal objects always give identical bytes, which is what request caching and
    content addressing rely on.

    :param obj: JSON-serializable object.
    :return: Bytes.
    :rtype: bytes
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


__all__ = ["check_path", "derive_seed", "dump_canonical_json"]
