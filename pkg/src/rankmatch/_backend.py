"""Pick the compiled kernels when built, the numpy ones otherwise.

Set RANKMATCH_PURE_PYTHON=1 to force the numpy path.
"""
import os

if os.environ.get("RANKMATCH_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
