"""Kernel backend selection.

Hot loops are written once as plain Python over numpy arrays and compiled
with numba when it is available.  Setting ``SUBLEVEL_LAB_BACKEND=numpy``
forces the vectorized numpy fallbacks instead, which is what the benchmark
and the parity tests compare against.
"""
from __future__ import annotations

import os

BACKEND_ENV = "SUBLEVEL_LAB_BACKEND"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None


def requested_backend() -> str:
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    return value


def use_numba() -> bool:
    return HAVE_NUMBA and requested_backend() == "numba"


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, else identity."""
    if _numba is None:
        return func
    return _numba.njit(cache=True)(func)
