"""Hot-kernel dispatch: compiled Cython extension when available, pure
NumPy fallback otherwise.

Set ``SPLATSEG_PURE_PYTHON=1`` to force the fallback (used by the kernel
benchmark to compare both).
"""

from __future__ import annotations

import os

from . import purepy


def _select():
    if os.environ.get("SPLATSEG_PURE_PYTHON", "") not in ("", "0"):
        return purepy
    try:
        from . import _compiled
        return _compiled
    except ImportError:
        return purepy


impl = _select()
KERNEL_BACKEND = impl.NAME

rasterize_first_hit = impl.rasterize_first_hit
region_grow = impl.region_grow
binary_dilate = impl.binary_dilate
binary_erode = impl.binary_erode
label_components = impl.label_components
background_reachable = impl.background_reachable


def get_impl(name: str):
    """Fetch a kernel implementation by name ('compiled' or 'purepy')."""
    if name == "purepy":
        return purepy
    if name == "compiled":
        from . import _compiled
        return _compiled
    raise ValueError(f"unknown kernel implementation: {name!r}")
