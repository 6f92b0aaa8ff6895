"""Backend selection for the hot pixel kernels.

The compiled extension is used when it imports cleanly; otherwise, or when
``TORNMEND_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy implementations in ``_pykernels`` are used.  ``BACKEND`` names the
active choice.
"""

import os

from . import _pykernels

_force_pure = os.environ.get("TORNMEND_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

png_unfilter = _impl.png_unfilter
diffuse_step = _impl.diffuse_step
convolve = _impl.convolve
nms = _impl.nms
hysteresis = _impl.hysteresis
profile_stats = _impl.profile_stats


def compiled_module():
    """The compiled kernel module, or None when it is not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
