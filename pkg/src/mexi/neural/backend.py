"""Kernel backend selection.

The compiled Cython kernels are used when the extension built; the pure
numpy twins are the fallback.  Set MEXI_BACKEND=python or =cython to
force a choice (forcing cython raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("MEXI_BACKEND", "").lower()

if _FORCED == "python":
    _impl = _kernels_py
    BACKEND_NAME = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND_NAME = "cython"
    except ImportError:
        if _FORCED == "cython":
            raise
        _impl = _kernels_py
        BACKEND_NAME = "python"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
