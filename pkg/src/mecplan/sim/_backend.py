"""Kernel backend selection.

The compiled extension is preferred when importable; set
``MECPLAN_PURE_PYTHON=1`` to force the pure-Python kernels (used by the
backend-equivalence tests and the benchmark).
"""

import os

if os.environ.get("MECPLAN_PURE_PYTHON") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    return kernels.BACKEND
