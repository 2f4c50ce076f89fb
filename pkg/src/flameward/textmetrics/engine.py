"""Kernel selection: compiled extension when built, pure Python otherwise.

Set FLAMEWARD_PURE_KERNEL=1 to force the pure path (used by the benchmark
and the twin-equivalence test).
"""

from __future__ import annotations

import os

if os.environ.get("FLAMEWARD_PURE_KERNEL"):
    from . import _scan_py as _impl
else:
    try:
        from . import _scan as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _scan_py as _impl

BACKEND: str = _impl.BACKEND
scan = _impl.scan
syllables = _impl.syllables
syllable_counts = _impl.syllable_counts
norm_token = _impl.norm_token
