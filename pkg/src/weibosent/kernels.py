"""Hot-loop kernels, compiled when available.

The Cython build (``weibosent._speedups``) is picked at import time; set
``WEIBOSENT_PURE_PYTHON=1`` to force the pure-Python versions. ``BACKEND``
names the active implementation.
"""

from __future__ import annotations

import os

from . import _purepy

SKIPPED = _purepy.SKIPPED
FIRST = _purepy.FIRST

if os.environ.get("WEIBOSENT_PURE_PYTHON"):
    _impl = _purepy
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _purepy

BACKEND = "cython" if _impl is not _purepy else "python"

normalize_content = _impl.normalize_content
char_counts = _impl.char_counts
group_duplicates = _impl.group_duplicates
content_digest = _impl.content_digest

__all__ = [
    "BACKEND",
    "FIRST",
    "SKIPPED",
    "char_counts",
    "content_digest",
    "group_duplicates",
    "normalize_content",
]
