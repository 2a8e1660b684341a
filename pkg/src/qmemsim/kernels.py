"""Kernel backend selection: compiled extension with numpy fallback.

The compiled backend is used when the extension built; setting the
environment variable ``QMEMSIM_PURE_PYTHON=1`` before import forces the
numpy fallback (useful for benchmarking and debugging).  Both backends
produce identical results bit for bit.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("QMEMSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

bin_sweep = _impl.bin_sweep
two_stage_outcomes = _impl.two_stage_outcomes

__all__ = ["bin_sweep", "two_stage_outcomes", "BACKEND"]
