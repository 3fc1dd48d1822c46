"""Select the kernel backend at import time.

The compiled extension is preferred when present; set
``HEAVYTRADE_KERNELS=python`` to force the numpy fallback, or
``HEAVYTRADE_KERNELS=compiled`` to fail loudly if the extension is missing.
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("HEAVYTRADE_KERNELS", "auto")

if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"HEAVYTRADE_KERNELS must be auto|compiled|python, got {_choice!r}")

if _choice == "python":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        kernels = _kernels_py

BACKEND = kernels.BACKEND_NAME


def available_backends():
    """All importable kernel modules, for parity tests and benchmarks."""
    out = [_kernels_py]
    try:
        from . import _kernels
        out.append(_kernels)
    except ImportError:
        pass
    return out
