"""Optional numba acceleration.

Hot kernels are written in the numpy subset numba understands and are
compiled with ``njit`` when numba is importable.  Setting the environment
variable ``HALS_DISABLE_NUMBA=1`` (read at import time) keeps the pure
numpy versions, which produce the same results up to rounding.
"""

import os

_DISABLED = os.environ.get("HALS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def jit(func):
    """Compile ``func`` with ``numba.njit`` if enabled, else return it as is.

    The uncompiled function stays reachable as ``func.py_func`` in both
    cases so benchmarks can compare the two paths.
    """
    if not HAS_NUMBA:
        func.py_func = func
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if HAS_NUMBA else "numpy"
