"""Backend dispatch for the recurrent kernels.

The active backend is chosen once at import time from the
``SPEAKERCLF_BACKEND`` environment variable:

* ``numba`` — require the numba-compiled kernels (error if unavailable)
* ``numpy`` — force the pure-numpy fallback
* unset    — numba when importable, numpy otherwise

Both implementations share one contract (see ``numpy_impl``) and agree
to float rounding; ``benchmarks/compare_backends.py`` times them side
by side.
"""

import os

from . import numpy_impl

_VALID = ("numba", "numpy")
_requested = os.environ.get("SPEAKERCLF_BACKEND", "").strip().lower()
if _requested and _requested not in _VALID:
    raise ValueError(
        f"SPEAKERCLF_BACKEND={_requested!r} is not valid; expected one of {_VALID}"
    )

if _requested in ("", "numba"):
    try:
        from . import numba_impl as _impl
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        _impl = numpy_impl
        BACKEND = "numpy"
else:
    _impl = numpy_impl
    BACKEND = "numpy"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward


def active_backend() -> str:
    return BACKEND
