"""Kernel execution backend selection.

The hot simulation kernels are plain Python functions over numpy arrays.
With the numba backend they are compiled with ``@njit``; with the python
backend the same source runs interpreted. Both produce bit-identical
results, so the python path doubles as a reference implementation (and as
a fallback where numba is unavailable).

Select with the environment variable ``CHAINSIM_BACKEND``:

    CHAINSIM_BACKEND=numba    force numba (error if not installed)
    CHAINSIM_BACKEND=python   force interpreted execution
    unset / auto              numba when importable, else python

The choice is fixed at import time for the whole process.
"""

import os

_requested = os.environ.get("CHAINSIM_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        import numba  # noqa: F401

        BACKEND = "numba"
    except ImportError:
        BACKEND = "python"
elif _requested in ("numba", "python"):
    BACKEND = _requested
    if BACKEND == "numba":
        import numba  # noqa: F401
else:
    raise RuntimeError(
        f"CHAINSIM_BACKEND={_requested!r} not recognized (use numba|python|auto)"
    )

USING_NUMBA = BACKEND == "numba"

if USING_NUMBA:
    from numba import njit as _njit

    def kernel(fn):
        """Compile a hot-path function (numba backend)."""
        return _njit(cache=True)(fn)

    def inline_kernel(fn):
        """Compile a small helper inlined into its callers.

        Calls between compiled functions pass the whole state struct by
        value; forcing IR-level inlining removes that copy, which
        dominates per-event cost for the leaf helpers.
        """
        return _njit(cache=True, inline="always")(fn)

else:

    def kernel(fn):
        """Identity decorator (python backend)."""
        return fn

    def inline_kernel(fn):
        return fn
