"""Backend selection for the hot DP kernels.

Set ``DYNBLPP_BACKEND=numpy`` to force the pure-numpy path; the default is
numba when it imports cleanly.
"""
from __future__ import annotations

import os
import warnings

_REQUESTED = os.environ.get("DYNBLPP_BACKEND", "numba").strip().lower()

if _REQUESTED not in ("numba", "numpy"):
    raise ValueError(f"DYNBLPP_BACKEND must be 'numba' or 'numpy', got {_REQUESTED!r}")

HAVE_NUMBA = False
if _REQUESTED == "numba":
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba not importable; falling back to numpy kernels")

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)

    def wrapper(f):
        return f

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrapper
