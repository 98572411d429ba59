"""Backend selection for the stencil kernels.

The compiled module is used when it imports; ``NLW_BACKEND=python`` forces the
numpy fallback. ``BACKEND`` names the active one.
"""
import os

from . import _kernels_py

_forced = os.environ.get("NLW_BACKEND", "").lower()

if _forced == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _kernels_py
        BACKEND = "python"

radial_accel = _impl.radial_accel
verlet_step = _impl.verlet_step
mode_accel = _impl.mode_accel
mode_verlet_step = _impl.mode_verlet_step


def get_backend(name):
    """Return the kernel module called ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
