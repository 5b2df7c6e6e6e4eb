"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``DIFFNORMALS_BACKEND=python`` is set, the numpy fallback runs instead.
"""

from __future__ import annotations

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = ("compiled", "python")


def available() -> tuple[str, ...]:
    return BACKENDS if _compiled is not None else ("python",)


def default_backend() -> str:
    forced = os.environ.get("DIFFNORMALS_BACKEND", "").strip().lower()
    if forced and forced != "auto":
        resolve(forced)
        return forced
    return "compiled" if _compiled is not None else "python"


def resolve(name: str | None):
    """Module implementing ``normals_range`` for backend ``name``."""
    if name is None or name == "auto":
        name = default_backend()
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
