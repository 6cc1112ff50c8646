"""Select the compiled core if it was built, else the numpy fallback.

Set ``HALFSPACE_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _core_py

__all__ = ["core", "load", "available"]


def load(name: str | None = None) -> ModuleType:
    """Return the backend module called ``name`` ("cython" or "python")."""
    name = (name or os.environ.get("HALFSPACE_BACKEND", "cython")).lower()
    if name == "python":
        return _core_py
    if name != "cython":
        raise ValueError(f"unknown backend {name!r}")
    try:
        return importlib.import_module("halfspace._core")
    except ImportError:
        return _core_py


def available() -> list[str]:
    names = ["python"]
    try:
        importlib.import_module("halfspace._core")
    except ImportError:
        return names
    return ["cython", *names]


core = load()
