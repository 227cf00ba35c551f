"""Split-kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is unavailable or EDUVULN_SPLIT_BACKEND=python is set. Both
backends are bit-identical by construction (see tests/test_forest.py).
"""

from __future__ import annotations

import os

from . import _split_np

_forced = os.environ.get("EDUVULN_SPLIT_BACKEND", "auto").lower()

if _forced == "python":
    _impl = _split_np
elif _forced in ("auto", "cython"):
    try:
        from . import _split_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _split_np
else:
    raise ValueError(f"EDUVULN_SPLIT_BACKEND must be auto, cython, or python, got {_forced!r}")

BACKEND: str = _impl.BACKEND
best_split_regression = _impl.best_split_regression
best_split_classification = _impl.best_split_classification
