"""Backend selection for the per-trial ZF kernel.

The compiled extension is used when it imports; otherwise the numpy
version is used. Set ``CPSA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _zfpy

BACKEND = "python"
zf_moments = _zfpy.zf_moments

if os.environ.get("CPSA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _zfcore
    except ImportError:  # extension not built
        pass
    else:
        zf_moments = _zfcore.zf_moments
        BACKEND = "cython"


def get_kernel(name=None):
    """Return ``zf_moments`` from a named backend (``cython`` or ``python``)."""
    if name is None:
        return zf_moments
    if name == "python":
        return _zfpy.zf_moments
    if name == "cython":
        from . import _zfcore
        return _zfcore.zf_moments
    raise ValueError(f"unknown backend {name!r}")
