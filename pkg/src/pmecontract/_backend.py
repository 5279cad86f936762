"""Select the stepping kernel at import time.

The compiled kernel is used when it was built; set
``PMECONTRACT_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _kernels_py

STATUS_OK = _kernels_py.STATUS_OK
STATUS_NEGATIVE = _kernels_py.STATUS_NEGATIVE
STATUS_NONFINITE = _kernels_py.STATUS_NONFINITE
STATUS_ZERO_FDE = _kernels_py.STATUS_ZERO_FDE

KERNELS = {"python": _kernels_py.advance}
try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    KERNELS["cython"] = _compiled.advance

_requested = os.environ.get("PMECONTRACT_BACKEND", "").strip().lower()
if _requested and _requested not in KERNELS:
    raise ImportError(f"PMECONTRACT_BACKEND={_requested!r} is not available "
                      f"(have {sorted(KERNELS)})")
BACKEND = _requested or ("cython" if "cython" in KERNELS else "python")
advance = KERNELS[BACKEND]


def get_kernel(name: str | None = None):
    return KERNELS[name or BACKEND]
