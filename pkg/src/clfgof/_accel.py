"""Numba switch.

Hot kernels are compiled with numba when it is importable and the
``CLFGOF_DISABLE_NUMBA`` environment variable is unset (or ``0``).
Otherwise the pure-numpy implementations in :mod:`clfgof.kernels` are used.
"""

import os

_flag = os.environ.get("CLFGOF_DISABLE_NUMBA", "0").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV
