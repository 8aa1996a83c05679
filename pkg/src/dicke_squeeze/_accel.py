"""Backend selection for the compiled kernels.

Kernels are compiled with numba unless ``DICKE_SQUEEZE_NO_NUMBA`` is set to a
truthy value (or numba is not importable), in which case the vectorized numpy
path is used instead.
"""

from __future__ import annotations

import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

ENV_FLAG = "DICKE_SQUEEZE_NO_NUMBA"
BACKENDS = ("numba", "numpy")


def numba_disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


def default_backend() -> str:
    if NUMBA_AVAILABLE and not numba_disabled_by_env():
        return "numba"
    return "numpy"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True)(func)
    return func
