"""Kernel backend selection.

The compiled extension is preferred when importable; setting the environment
variable ``IMPULSECTRL_PURE_PYTHON=1`` (before import) forces the pure-numpy
fallback.  Both backends expose the same four functions with identical
numerical semantics.
"""

import os

if os.environ.get("IMPULSECTRL_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels_c as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    """Name of the active kernel backend: ``"compiled"`` or ``"python"``."""
    return kernels.BACKEND
