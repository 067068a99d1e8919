"""Select the kernel implementation at import time.

The compiled extension is used when it is importable; setting
``SAWBLOCK_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _pykernels

if os.environ.get("SAWBLOCK_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"

python_kernels = _pykernels


def compiled_kernels():
    """Return the compiled module or ``None`` when it was not built."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
