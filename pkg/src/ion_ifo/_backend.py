"""Kernel backend selection.

The hot loops in :mod:`ion_ifo._kernels` exist twice: a numba ``@njit`` version
and a plain numpy version. ``ION_IFO_BACKEND=numpy`` forces the numpy path;
the default is numba whenever it imports cleanly.
"""

import os

BACKEND_ENV = "ION_IFO_BACKEND"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None


def requested_backend() -> str:
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    return value


USE_NUMBA = HAVE_NUMBA and requested_backend() == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise the identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
