"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
numpy fallback is used.  DFSUP_BACKEND=python|compiled forces a choice at
import time, and use_backend() swaps it temporarily (tests, benchmarks).
"""

import os
from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _speedups
except ImportError:
    _speedups = None

_BACKENDS = {"python": _kernels_py}
if _speedups is not None:
    _BACKENDS["compiled"] = _speedups

_requested = os.environ.get("DFSUP_BACKEND", "").strip().lower()
if _requested:
    if _requested not in _BACKENDS:
        raise ImportError(
            f"DFSUP_BACKEND={_requested!r} requested but only {sorted(_BACKENDS)} available"
        )
    _active = _BACKENDS[_requested]
else:
    _active = _BACKENDS.get("compiled", _kernels_py)


def kernels():
    """The active kernel module."""
    return _active


def backend_name():
    return _active.NAME


def available_backends():
    return sorted(_BACKENDS)


@contextmanager
def use_backend(name):
    """Temporarily switch the active kernel backend."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {sorted(_BACKENDS)})")
    prev = _active
    _active = _BACKENDS[name]
    try:
        yield _active
    finally:
        _active = prev
