"""Kernel selection: compiled extension when available, pure Python otherwise.

RAMP_PURE_PYTHON=1 forces the fallback (useful for benchmarking and for
environments without a compiler).
"""

from __future__ import annotations

import os

from . import _occupancy_py

if os.environ.get("RAMP_PURE_PYTHON"):
    _impl = _occupancy_py
else:
    try:
        from . import _occupancy_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _occupancy_py

kernel_name = _impl.__name__.rsplit(".", 1)[-1]
max_occupancy = _impl.max_occupancy
earliest_feasible = _impl.earliest_feasible
