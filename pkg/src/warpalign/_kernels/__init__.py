"""Alignment DP kernels with a compiled fast path.

The Cython extension is optional: when it is missing, or when the
environment variable ``WARPALIGN_PURE_PYTHON`` is set to a non-zero
value, the pure-Python reference implementation takes over. Both
backends share one contract (see ``_reference``); ``BACKEND`` records
which one is active.
"""

from __future__ import annotations

import os

from . import _reference

if os.environ.get("WARPALIGN_PURE_PYTHON", "0").strip().lower() in ("", "0", "false"):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _reference
        BACKEND = "python"
else:
    _impl = _reference
    BACKEND = "python"

dtw_accumulate = _impl.dtw_accumulate
softdtw_forward = _impl.softdtw_forward
softdtw_backward = _impl.softdtw_backward

__all__ = ["BACKEND", "dtw_accumulate", "softdtw_forward", "softdtw_backward"]
