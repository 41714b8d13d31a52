"""Kernel backend selection.

The hot inner loops (triangle fill, Monte Carlo point tests) exist twice:
a numba @njit version and a vectorized pure-numpy version. Both compute
identical IEEE-754 operation sequences, so their outputs are bit-equal.

Set TCMASK_BACKEND=numpy to force the numpy path (also used automatically
when numba is not importable). Anything else selects numba.
"""

import os

_requested = os.environ.get("TCMASK_BACKEND", "numba").strip().lower()

if _requested == "numpy":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def njit_kernel(func):
    """Apply @njit(cache=True, nogil=True) when the numba backend is active.

    With the numpy backend the function is returned untouched; callers are
    expected to dispatch to a vectorized twin instead of the raw loop.
    """
    if USE_NUMBA:
        from numba import njit

        return njit(cache=True, nogil=True)(func)
    return func
