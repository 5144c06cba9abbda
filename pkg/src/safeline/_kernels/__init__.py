"""Analysis hot kernels: compiled extension when available, pure Python otherwise.

``BACKEND`` reports which implementation was selected at import time.
Set ``SAFELINE_PURE=1`` to force the pure-Python kernels.
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("SAFELINE_PURE"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

minimize_cut_sets = _impl.minimize_cut_sets
dnf_probability = _impl.dnf_probability
rare_event_probability = _impl.rare_event_probability

__all__ = [
    "BACKEND",
    "dnf_probability",
    "minimize_cut_sets",
    "pure",
    "rare_event_probability",
]
