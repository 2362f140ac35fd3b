"""Kernel backend selection.

The compiled Cython kernel is used when it imports; otherwise the numpy
fallback takes over.  Setting ``SPPM_BACKEND=python`` forces the fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("SPPM_BACKEND", "").lower() == "python":
        raise ImportError("forced pure-Python backend")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_kernel(name=None):
    """Return the ``logdet_terms`` implementation for ``name`` (default: active backend)."""
    name = name or BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled.logdet_terms
    if name == "python":
        return _fallback.logdet_terms
    raise ValueError(f"unknown backend {name!r}")
