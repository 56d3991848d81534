"""Grid-sweep kernels: compiled extension with a numpy fallback.

The backend is picked at import time. Set ``ROBOMILL_KERNEL=python`` to
force the fallback.
"""

import os

from . import _sweep_py

_forced = os.environ.get("ROBOMILL_KERNEL", "").lower()

compiled = None
if _forced != "python":
    try:
        from . import _sweep_cy as compiled
    except ImportError:
        if _forced == "cython":
            raise

BACKENDS = {"python": _sweep_py}
if compiled is not None:
    BACKENDS["cython"] = compiled

BACKEND = "cython" if compiled is not None else "python"
_active = BACKENDS[BACKEND]
sweep_wedge = _active.sweep_wedge
sweep_teeth = _active.sweep_teeth


def get_backend(name=None):
    """Kernel module by name (``None`` -> the active backend)."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
