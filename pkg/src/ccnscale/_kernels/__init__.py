"""Kernel backend selection.

Two interchangeable implementations of the hot inner loops exist:

* ``ccnscale._kernels._fast`` — Cython extension, built at install time
  when a C compiler is available;
* ``ccnscale._kernels._ref``  — pure Python, always available.

Both perform identical floating-point arithmetic and return identical
results.  The compiled backend is preferred when importable.  Set the
environment variable ``CCNSCALE_BACKEND`` to ``python`` or ``compiled``
to force one (forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _ref

_forced = os.environ.get("CCNSCALE_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _ref
elif _forced == "compiled":
    from . import _fast as _impl  # type: ignore[no-redef]
elif _forced == "":
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _ref
else:
    raise RuntimeError(
        f"CCNSCALE_BACKEND={_forced!r}: expected 'python' or 'compiled'"
    )

BACKEND_NAME: str = _impl.BACKEND_NAME
RING_MIN_HOLDERS: int = _impl.RING_MIN_HOLDERS
segment_cells = _impl.segment_cells
nearest_linear = _impl.nearest_linear
nearest_ring = _impl.nearest_ring
trace_batch = _impl.trace_batch


def get_backend() -> str:
    """Name of the active kernel backend: ``python`` or ``compiled``."""
    return BACKEND_NAME
