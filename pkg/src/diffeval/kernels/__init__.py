"""Hot numeric kernels with two interchangeable lanes.

The numba lane JIT-compiles the O(n^2) pair-counting and the budgeted
band-apportionment loops; the numpy lane is a pure-numpy fallback. Both
lanes return exact integer results, so they are bit-identical.

Lane selection happens at import time via the DIFFEVAL_KERNELS env var:
  auto   (default) numba when importable, else numpy
  numba  require the JIT lane, error if numba is missing
  numpy  force the fallback lane

``benchmarks/kernel_bench.py`` times both lanes side by side.
"""

from __future__ import annotations

import os

from . import _numpy_impl

_requested = os.environ.get("DIFFEVAL_KERNELS", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"DIFFEVAL_KERNELS={_requested!r} not understood; use auto, numba or numpy"
    )

if _requested == "numpy":
    _numba_impl = None
else:
    try:
        from . import _numba_impl
    except ImportError:
        if _requested == "numba":
            raise RuntimeError(
                "DIFFEVAL_KERNELS=numba but numba is not installed; "
                "pip install diffeval[speed]"
            ) from None
        _numba_impl = None

if _numba_impl is not None:
    ACTIVE_LANE = "numba"
    _impl = _numba_impl
else:
    ACTIVE_LANE = "numpy"
    _impl = _numpy_impl

kendall_counts = _impl.kendall_counts
banded_draw_sequence = _impl.banded_draw_sequence


def available_lanes() -> tuple[str, ...]:
    return ("numba", "numpy") if _numba_impl is not None else ("numpy",)
