"""Hot kernels, compiled when available.

``BACKEND`` is ``"cython"`` when the extension imported and ``"python"``
otherwise. Setting ``QUANTMDP_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

if os.environ.get("QUANTMDP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

nearest_brute = _impl.nearest_brute
bin_counts = _impl.bin_counts

__all__ = ["BACKEND", "nearest_brute", "bin_counts"]
