"""Selects the compiled kernels when available, else the Python fallback.

Set ``MASERLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

try:
    if os.environ.get("MASERLAB_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from ._kernels import count_below, second_eigenvalue, tridiag_solve

    BACKEND = "cython"
except ImportError:
    from ._kernels_py import count_below, second_eigenvalue, tridiag_solve

    BACKEND = "python"

__all__ = ["BACKEND", "count_below", "second_eigenvalue", "tridiag_solve"]
