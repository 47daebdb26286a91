"""Kernel backend selection.

The hot sequence kernels (LSTM forward/backward, fused FNN training loop)
exist twice: a numba-compiled version and a pure-numpy reference. The
``PAXNN_BACKEND`` environment variable picks one:

* ``numba`` - require the compiled kernels, fail if numba is unavailable
* ``numpy`` - force the pure-numpy path
* ``auto`` (default) - numba when importable, numpy otherwise

Both backends implement the same math on float64; results agree to
rounding. Within one backend, every kernel is deterministic.
"""

from __future__ import annotations

import os

from ..errors import ConfigError

_CHOICES = ("auto", "numba", "numpy")
_active = None


def _load(choice: str):
    if choice not in _CHOICES:
        raise ConfigError(f"PAXNN_BACKEND must be one of {_CHOICES}, got {choice!r}")
    if choice in ("auto", "numba"):
        try:
            from . import kernels_numba
            return kernels_numba
        except ImportError:
            if choice == "numba":
                raise ConfigError("numba backend requested but numba is not importable")
    from . import kernels_numpy
    return kernels_numpy


def kernels():
    """The active kernel module (resolved once, from the environment)."""
    global _active
    if _active is None:
        _active = _load(os.environ.get("PAXNN_BACKEND", "auto").lower())
    return _active


def use(choice: str):
    """Force a backend programmatically (tests and benchmarks)."""
    global _active
    _active = _load(choice)
    return _active


def active_name() -> str:
    return kernels().NAME
