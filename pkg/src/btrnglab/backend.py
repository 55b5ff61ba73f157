"""Kernel backend selection.

The hot search loops exist twice: a compiled extension (_ckernel) and
a pure-Python/numpy fallback (_pykernel) with the same interface.
The compiled one is preferred when importable; set BTRNGLAB_PURE=1 to
force the fallback, e.g. for debugging or on platforms without a
compiler. Both produce bit-identical results for the same inputs, so
switching backends never changes an outcome, only the wall time.
"""

import os

from . import _pykernel

if os.environ.get("BTRNGLAB_PURE") == "1":
    kernel = _pykernel
else:
    try:
        from . import _ckernel as kernel  # type: ignore[no-redef]
    except ImportError:
        kernel = _pykernel

#: "compiled" or "pure"
BACKEND = kernel.NAME


def available_backends():
    """Names of the backends importable in this environment."""
    names = []
    try:
        from . import _ckernel  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    names.append("pure")
    return names


def get_kernel(name=None):
    """Fetch a kernel module by name; None means the selected one."""
    if name is None:
        return kernel
    if name == "pure":
        return _pykernel
    if name == "compiled":
        from . import _ckernel

        return _ckernel
    raise ValueError(f"unknown backend {name!r}")
