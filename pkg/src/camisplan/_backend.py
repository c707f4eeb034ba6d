"""Kernel backend selection.

The hot loops of the solver ship in two flavours: numba-compiled scalar
kernels and a vectorised numpy fallback. ``CAMISPLAN_BACKEND`` picks one at
import time (``numba`` or ``numpy``); numba is the default when importable.
"""
import logging
import os

log = logging.getLogger(__name__)

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def _default_backend():
    name = os.environ.get("CAMISPLAN_BACKEND", "").strip().lower()
    if name in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"CAMISPLAN_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        log.warning("numba requested but not importable; using numpy backend")
        return "numpy"
    return name


DEFAULT_BACKEND = _default_backend()


def resolve(backend=None):
    """Return a concrete backend name, falling back to the env default."""
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
