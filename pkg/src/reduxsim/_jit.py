"""Optional numba acceleration.

Set ``REDUXSIM_DISABLE_JIT=1`` to force the pure-numpy batch path even when
numba is importable.
"""
import os

DISABLED = os.environ.get("REDUXSIM_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if DISABLED:
        raise ImportError("numba disabled by REDUXSIM_DISABLE_JIT")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(func=None, *_args, **_kwargs):
        if callable(func):
            return func
        return lambda f: f


__all__ = ["njit", "HAVE_NUMBA", "DISABLED"]
