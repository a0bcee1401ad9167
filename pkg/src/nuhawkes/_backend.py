"""Backend selection: numba-jitted hot loops vs. a pure NumPy/Python path.

The accelerated path is the default.  Setting the environment variable
``NUH_PURE_NUMPY=1`` (read once, at import time) disables numba entirely and
every hot kernel runs as plain Python/NumPy.  Both paths consume identical
random streams, so results agree up to floating-point rounding of libm calls.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("NUH_PURE_NUMPY", "0")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency, but be robust
    _numba = None

NUMBA_ENABLED = _numba is not None and _FLAG not in ("1", "true", "yes")


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def maybe_jit(*args, **kwargs):
    """``numba.njit`` when the accelerated backend is active, identity otherwise.

    Usable both as ``@maybe_jit`` and ``@maybe_jit(cache=True, ...)``.
    """
    if args and callable(args[0]) and not kwargs:
        func = args[0]
        if NUMBA_ENABLED:
            return _numba.njit(cache=True)(func)
        return func

    def deco(func):
        if NUMBA_ENABLED:
            return _numba.njit(*args, **kwargs)(func)
        return func

    return deco


def set_num_threads(n: int) -> None:
    """Cap the numba thread pool; harmless no-op on the pure backend."""
    if NUMBA_ENABLED and n > 0:
        _numba.set_num_threads(min(n, _numba.config.NUMBA_NUM_THREADS))
