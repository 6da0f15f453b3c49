"""Kernel backend selection.

Hot numeric kernels (the column renderer and the convolution loops) ship in
two versions: a numba ``@njit`` build and a pure-numpy fallback.  The active
backend is chosen once at import time from the ``POLICYMAP_BACKEND``
environment variable:

    POLICYMAP_BACKEND=numba   use JIT kernels (default when numba imports)
    POLICYMAP_BACKEND=numpy   force the vectorized numpy fallback

Both paths are deterministic; they may differ from each other in the last
float bit because summation order differs.  ``benchmarks/bench_kernels.py``
times the two side by side.
"""

import os

_requested = os.environ.get("POLICYMAP_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"POLICYMAP_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numba":
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if NUMBA_ENABLED else "numpy"


def njit_if_enabled(**options):
    """Decorator: ``numba.njit(**options)`` on the numba backend, no-op otherwise.

    Only suitable for functions whose plain-Python body is an acceptable
    fallback; the renderer and conv kernels instead keep separate numpy
    implementations.
    """

    def wrap(fn):
        if NUMBA_ENABLED:
            import numba

            return numba.njit(**options)(fn)
        return fn

    return wrap
