"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
implementations are used. Set ``FLEXSADDLE_PURE_PYTHON=1`` to force the
fallback (the test suite runs both).
"""
import os

from . import _kernels_py

if os.environ.get("FLEXSADDLE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

rigidity_rows = _impl.rigidity_rows
squared_lengths = _impl.squared_lengths
laplacian_hessian = _impl.laplacian_hessian
stress_forms = _impl.stress_forms
