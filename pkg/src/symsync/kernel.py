"""Backend selection for the trial kernel.

The compiled extension is used when importable; ``SYMSYNC_KERNEL=python``
forces the pure-Python twin. Both produce identical outputs.
"""

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

BACKENDS = {"python": _kernel_py}
if _kernel_c is not None:
    BACKENDS["cython"] = _kernel_c


def default_backend() -> str:
    forced = os.environ.get("SYMSYNC_KERNEL", "").strip().lower()
    if forced:
        if forced not in BACKENDS:
            raise RuntimeError(f"SYMSYNC_KERNEL={forced!r} is not available; have {sorted(BACKENDS)}")
        return forced
    return "cython" if "cython" in BACKENDS else "python"


def get_backend(name: str | None = None):
    return BACKENDS[name or default_backend()]
