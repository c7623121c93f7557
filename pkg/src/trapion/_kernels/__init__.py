"""Hot loops, compiled when available.

The Cython module ``_ckernels`` is used if it was built and imports
cleanly; otherwise the NumPy implementations in ``_pykernels`` are used.
Set ``TRAPION_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
propagate_batch = _pykernels.propagate_batch
doppler_events = _pykernels.doppler_events

if os.environ.get("TRAPION_PURE_PYTHON") != "1":
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None
    if _ckernels is not None:
        BACKEND = "cython"
        propagate_batch = _ckernels.propagate_batch
        doppler_events = _ckernels.doppler_events

NEED_MORE = _pykernels.NEED_MORE
HIT_MAX_EVENTS = _pykernels.HIT_MAX_EVENTS
STALLED = _pykernels.STALLED
ABSORB = _pykernels.ABSORB
EMIT = _pykernels.EMIT


def get_backend(name=None):
    """Return ``(propagate_batch, doppler_events)`` for ``name`` (``"python"``/``"cython"``)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pykernels.propagate_batch, _pykernels.doppler_events
    if name == "cython":
        from . import _ckernels as mod
        return mod.propagate_batch, mod.doppler_events
    raise ValueError(f"unknown kernel backend {name!r}")
