"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the pure-Python
module is loaded.  Setting ``QSHAPE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("QSHAPE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

logz_table = _impl.logz_table
sample_paths = _impl.sample_paths

__all__ = ["BACKEND", "logz_table", "sample_paths"]
