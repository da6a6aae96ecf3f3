"""Backend selection for the numerical kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is loaded. Set ``SIRKIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from sirkit import _kernels_py

if os.environ.get("SIRKIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from sirkit import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

cascade = _impl.cascade
notch_model = _impl.notch_model
tan_product_roots = _impl.tan_product_roots

__all__ = ["BACKEND", "cascade", "notch_model", "tan_product_roots"]
