"""Kernel backend selection.

Hot inner loops (convolutions, the projectile flight integrator) are
compiled with Numba's ``@njit`` by default.  Setting the environment
variable ``SLINGDQN_BACKEND=numpy`` before import switches every call
site to a pure-NumPy/Python implementation of the same math; this is
the fallback when Numba is unavailable and the reference path for
debugging.  ``benchmarks/bench_kernels.py`` times the two side by side.
"""

import os

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _njit = None
    HAVE_NUMBA = False

_requested = os.environ.get("SLINGDQN_BACKEND", "").strip().lower()
if not _requested:
    _requested = "numba" if HAVE_NUMBA else "numpy"
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"SLINGDQN_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )
if _requested == "numba" and not HAVE_NUMBA:
    raise ImportError("SLINGDQN_BACKEND=numba requested but numba is not installed")

USE_NUMBA = _requested == "numba"
BACKEND = _requested


def compiled(fn):
    """njit-compile ``fn`` when Numba is importable, else return it unchanged.

    Compilation is independent of the selected backend so that both
    variants of a kernel exist in one process (the benchmark relies on
    this); dispatch at the call sites checks ``USE_NUMBA``.
    """
    if HAVE_NUMBA:
        return _njit(cache=True)(fn)
    return fn
