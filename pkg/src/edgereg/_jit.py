"""Numba toggle: set EDGEREG_DISABLE_NUMBA=1 to run the kernels as plain
Python (slow, for debugging).  Both modes execute the same source."""

import os

if os.environ.get("EDGEREG_DISABLE_NUMBA", "") not in ("", "0"):

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

else:
    from numba import njit  # noqa: F401
