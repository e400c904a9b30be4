"""Numba switch.

Hot kernels are compiled with numba when it is importable and
``PLANARBINGHAM_DISABLE_NUMBA`` is unset (or ``0``).  Setting the flag to
``1`` routes every kernel through its vectorized numpy twin instead.
"""
import os

_FLAG = "PLANARBINGHAM_DISABLE_NUMBA"


def _disabled_by_env():
    return os.environ.get(_FLAG, "0").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _disabled_by_env()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is present, identity decorator otherwise.

    Functions are always compiled when numba exists, even if the env flag
    disables them, so the benchmark and the cross-path tests can still
    reach the compiled variant explicitly.
    """
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
