"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation is used.  Setting ``MUSKAT_PURE_PYTHON=1`` forces numpy.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

__all__ = ["BACKEND", "exp_sweep", "thomas_solve", "available_backends", "get_backend"]

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("MUSKAT_PURE_PYTHON", "0") != "1":
    _active: ModuleType = _compiled
    BACKEND = "compiled"
else:
    _active = _kernels_py
    BACKEND = "python"

exp_sweep = _active.exp_sweep
thomas_solve = _active.thomas_solve


def available_backends() -> list[str]:
    return ["compiled", "python"] if _compiled is not None else ["python"]


def get_backend(name: str | None = None) -> ModuleType:
    """Kernel module by name; ``None`` gives the active one."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
