"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set DEPCTL_PURE_PYTHON=1 to force the numpy implementation (used by the
benchmark and by CI to exercise both paths).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("DEPCTL_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ext as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

jacobi_eigh_batch = _impl.jacobi_eigh_batch
lindley_batch = _impl.lindley_batch


def backend() -> str:
    return BACKEND
