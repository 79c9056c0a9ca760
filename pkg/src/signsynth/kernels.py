"""Backend selection for the pixel kernels.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. Set ``SIGNSYNTH_PURE_PYTHON=1`` to force the fallback.
Both backends are bit-identical, so results never depend on the choice.
"""

import os

from . import _kernels_py

if os.environ.get("SIGNSYNTH_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
remap = _impl.remap
blur = _impl.blur
morph = _impl.morph

__all__ = ["BACKEND", "remap", "blur", "morph"]
