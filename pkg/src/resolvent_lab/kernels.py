"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``RESOLVENT_LAB_PURE=1`` to force the numpy implementation.
"""
import os

from . import _kernels_py

BACKEND = "python"
displacement = _kernels_py.displacement
tensor_select = _kernels_py.tensor_select

if not os.environ.get("RESOLVENT_LAB_PURE"):
    try:
        from . import _kernels as _ext
    except ImportError:  # extension not built
        _ext = None
    if _ext is not None:
        BACKEND = "cython"
        displacement = _ext.displacement
        tensor_select = _ext.tensor_select
