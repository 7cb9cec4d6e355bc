"""Kernel backend selection.

The compiled extension is preferred when importable; SRCSIM_BACKEND
forces the choice ("cython" or "python").  Float kernels always come
from the numpy module so both backends produce identical float
trajectories; only the integer path is swapped.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _load():
    choice = os.environ.get("SRCSIM_BACKEND", "auto")
    if choice not in ("auto", "cython", "python"):
        raise ValueError("invalid backend")
    if choice in ("auto", "cython"):
        try:
            from . import _kernels_cy
            return _kernels_cy, "cython"
        except ImportError:
            if choice == "cython":
                raise
    return _kernels_py, "python"


_int_kernels, BACKEND = _load()

src_layer_step_int = _int_kernels.src_layer_step_int
ir_accumulate_int = _int_kernels.ir_accumulate_int
src_layer_step_float = _kernels_py.src_layer_step_float
