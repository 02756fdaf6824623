"""Kernel backend selection.

Hot inner loops in ``_kernels`` ship in two versions: a numba ``@njit``
build and a pure-numpy twin.  The numba build is used when numba imports
cleanly and the environment variable ``QCONTOUR_DISABLE_NUMBA`` is unset
(or set to 0/false/off).  The flag only trades speed; both backends are
deterministic and agree to floating-point roundoff.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("QCONTOUR_DISABLE_NUMBA", "").strip().lower() in _FALSY


NUMBA_AVAILABLE = False
if _numba_requested():
    try:
        import numba  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:
        NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE
BACKEND = "numba" if USE_NUMBA else "numpy"
