"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``COORDNET_PURE_PYTHON`` is set to a non-empty value, the pure-Python
versions are used. Both give identical results.
"""

import os

from coordnet import _pykernels

if os.environ.get("COORDNET_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from coordnet import _ckernels as _impl
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"



def implementation(name: str):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from coordnet import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


sync_pairs = _impl.sync_pairs
local_move = _impl.local_move
MAX_PROVENANCE = _pykernels.MAX_PROVENANCE

__all__ = ["BACKEND", "MAX_PROVENANCE", "implementation", "local_move", "sync_pairs"]
