"""JIT switch for the hot kernels.

Set ``SELFNORM_DISABLE_NUMBA=1`` before import to run every kernel as plain
numpy/Python. The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("SELFNORM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` with numba in nopython mode, or return it untouched.

    The compiled dispatcher keeps the original function on ``.py_func``; the
    fallback sets the same attribute so callers can always reach the numpy path.
    """
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    fn.py_func = fn
    return fn


def backend():
    return "numba" if NUMBA_ENABLED else "numpy"
