"""Selection between numba-jitted kernels and the pure-numpy fallback.

The hot loops in :mod:`bschain._kernels` exist in two flavors: a
loop-oriented twin compiled with numba (default) and a vectorized numpy
twin. Set ``BSCHAIN_DISABLE_NUMBA=1`` to dispatch to the numpy path; the
numba twins are still compiled lazily if numba is importable, so the
benchmark and the cross-path tests can exercise both.
"""

from __future__ import annotations

import os

ENV_FLAG = "BSCHAIN_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - mirror has numba, but stay importable
    numba = None
    HAVE_NUMBA = False


def _flag_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


#: Active dispatch decision, frozen at import time.
USE_NUMBA = HAVE_NUMBA and not _flag_disabled()


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged.

    Compilation is requested even when dispatch is disabled, so both twins
    stay callable for benchmarking. ``cache=True`` persists compiled code
    across processes; ``nogil=True`` lets replica threads run in parallel.
    """
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def active_path() -> str:
    return "numba" if USE_NUMBA else "numpy"
