"""Hot-kernel dispatch: compiled extension if available, numpy otherwise.

``SCENTREE_PURE_PYTHON=1`` forces the numpy fallback (used by the kernel
benchmark and by tests that cross-check both implementations).
"""

import os

from . import fallback

if os.environ.get("SCENTREE_PURE_PYTHON") == "1":
    _impl = fallback
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = fallback

COMPILED = _impl.COMPILED
pivot_update = _impl.pivot_update
rbf_cross = _impl.rbf_cross

__all__ = ["COMPILED", "pivot_update", "rbf_cross", "fallback"]
