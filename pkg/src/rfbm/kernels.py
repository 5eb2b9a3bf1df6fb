"""Hot loops, dispatched to the Cython extension when it is importable.

Set ``RFBM_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _fallback

if os.environ.get("RFBM_BACKEND", "").lower() == "python":
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "python" if _impl is _fallback else "cython"

kahan_cumsum = _impl.kahan_cumsum
lindley = _impl.lindley
window_sup = _impl.window_sup
crossings = _impl.crossings
field_grid_max = _impl.field_grid_max


def available_backends():
    """Name -> module for every backend importable in this interpreter."""
    out = {"python": _fallback}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
