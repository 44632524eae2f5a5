"""Kernel dispatch: the compiled core when importable, numpy otherwise.

Set ``POISBIN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if not os.environ.get("POISBIN_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels
else:
    _impl = _pykernels

bernoulli_convolve = _impl.bernoulli_convolve
contour_trapezoid = _impl.contour_trapezoid
reverse_cumsum = _impl.reverse_cumsum

__all__ = ["BACKEND", "bernoulli_convolve", "contour_trapezoid", "reverse_cumsum"]
