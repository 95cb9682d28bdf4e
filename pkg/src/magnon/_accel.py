"""Backend switch between numba-compiled kernels and the numpy fallback.

Numba is used when it imports cleanly and ``MAGNON_DISABLE_NUMBA`` is unset
(or set to ``0``/``false``). The choice is made once, at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("MAGNON_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def jit(func):
    """Compile ``func`` in nopython mode, or return it untouched if numba is missing.

    The compiled object is always returned (even when the numpy path is active)
    so the benchmark can time both variants in one process; compilation itself
    is lazy and only happens on first call.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
