"""Kernel backend selection.

The compiled extension is used when importable, unless ``BIC_PURE_PYTHON``
is set to a non-empty value other than ``0``.
"""

import os

import numpy as np

from . import _kernels_py

NAMES = (
    "sphere_green_sum",
    "plane_log_sum",
    "torus_green_exact",
    "torus_green_sum",
    "torus_fourier",
)


def _load_compiled():
    if os.environ.get("BIC_PURE_PYTHON", "0") not in ("", "0"):
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()
BACKEND = "compiled" if _compiled is not None else "python"


def get(name, backend=None):
    """Return kernel ``name`` from ``backend`` ("compiled" or "python"); default active one."""
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return getattr(_compiled, name)
    return getattr(_kernels_py, name)


def c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sphere_green_sum(X, Y, w, fy, fx, backend=None):
    return get("sphere_green_sum", backend)(c64(X), c64(Y), c64(w), c64(fy), c64(fx))


def plane_log_sum(X, Y, w, backend=None):
    return get("plane_log_sum", backend)(c64(X), c64(Y), c64(w))


def torus_green_exact(D, backend=None):
    return get("torus_green_exact", backend)(c64(D))


def torus_green_sum(X, Y, w, fy, fx, backend=None):
    return get("torus_green_sum", backend)(c64(X), c64(Y), c64(w), c64(fy), c64(fx))


def torus_fourier(D, truncation, backend=None):
    return get("torus_fourier", backend)(c64(D), int(truncation))
