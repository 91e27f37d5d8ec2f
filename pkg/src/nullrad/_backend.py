"""Kernel backend selection.

``NULLRAD_BACKEND`` picks the implementation of the hot marching loops:
``numba`` (JIT), ``numpy`` (vectorized sweeps), or ``auto`` (numba when
importable, otherwise numpy).  Both paths perform the same per-cell
arithmetic in the same order, so results agree to the last bit on the
platforms we target; custom (non-quintic) nonlinearities always take the
numpy path because they carry a Python callable.
"""

from __future__ import annotations

import os

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def backend_name() -> str:
    """Resolved backend for quintic kernels: 'numba' or 'numpy'."""
    choice = os.environ.get("NULLRAD_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"NULLRAD_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("NULLRAD_BACKEND=numba but numba is not installed")
        return "numba"
    return "numba" if HAS_NUMBA else "numpy"
