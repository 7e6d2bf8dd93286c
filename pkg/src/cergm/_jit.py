"""JIT switch for the hot kernels.

Set ``CERGM_DISABLE_NUMBA=1`` to run every kernel as plain Python over numpy
arrays. The kernels are written once; without numba they are simply not
compiled.
"""
import os

_FLAG = os.environ.get("CERGM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity otherwise.

    Works both bare (``@njit``) and with options (``@njit(nogil=True)``).
    """
    if args and callable(args[0]) and len(args) == 1 and not kwargs:
        func = args[0]
        if USE_NUMBA:
            return numba.njit(cache=True)(func)
        return func

    def wrap(func):
        if USE_NUMBA:
            kwargs.setdefault("cache", True)
            return numba.njit(*args, **kwargs)(func)
        return func

    return wrap


def backend():
    return "numba" if USE_NUMBA else "python"
