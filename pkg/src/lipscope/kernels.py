"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``LIPSCOPE_PURE_PYTHON`` is set to a non-empty value, the
numpy implementation is loaded. Both expose the same functions.
"""

import os

from lipscope import _kernels_py

if os.environ.get("LIPSCOPE_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from lipscope import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

spectral_norms = _impl.spectral_norms
lp_best_vertex = _impl.lp_best_vertex
upper_hull = _impl.upper_hull

__all__ = ["BACKEND", "spectral_norms", "lp_best_vertex", "upper_hull"]
