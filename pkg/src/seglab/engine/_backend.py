"""Kernel selection: compiled extension if available, pure Python otherwise.

Set SEGLAB_PURE_PYTHON=1 to force the fallback (used by the parity tests and
the benchmark).
"""

from __future__ import annotations

import os

from . import _pykernel

_force_pure = os.environ.get("SEGLAB_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    kernel = _pykernel
    COMPILED = False
else:
    try:
        from . import _ckernel as kernel  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        kernel = _pykernel
        COMPILED = False

BACKEND = "compiled" if COMPILED else "python"


def kernel_backend() -> str:
    """Name of the kernel executing runs in this process."""
    return BACKEND
