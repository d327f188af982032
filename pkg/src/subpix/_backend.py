"""Kernel backend selection.

The compiled ``subpix._kernels`` module is used when it imports; otherwise the
numpy kernels in ``subpix._kernels_py`` take over. Set ``SUBPIX_BACKEND=python``
to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()


def available() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_kernels(name: str | None = None):
    """Kernel module by name (``"cython"`` or ``"python"``); default per environment."""
    if name is None:
        name = os.environ.get("SUBPIX_BACKEND", "").strip().lower() or None
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


kernels = get_kernels()
BACKEND = kernels.NAME
