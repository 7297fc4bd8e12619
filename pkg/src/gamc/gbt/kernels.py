"""Backend selection for the boosted-tree histogram kernels.

Prefers the compiled extension; falls back to the pure-NumPy implementation
when the extension is unavailable or when GAMC_PURE_PYTHON=1 is set. Both
backends are bitwise-equivalent, so the choice affects speed only.
"""

import os

from . import _kernels_py

if os.environ.get("GAMC_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
hist_accumulate = _impl.hist_accumulate
best_split = _impl.best_split


def available_backends():
    """Names of the importable kernel backends."""
    out = ["python"]
    try:
        from . import _kernels_c  # noqa: F401

        out.insert(0, "compiled")
    except ImportError:
        pass
    return out
