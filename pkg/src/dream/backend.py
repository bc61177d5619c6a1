"""Kernel backend selection.

``DREAM_BACKEND`` picks the lane for the sequential event-stream kernels:

  auto   use numba when importable, else pure numpy (default)
  numba  require numba; raise if unavailable
  numpy  force the pure-numpy fallback

The choice is resolved once at import time.  Both lanes draw from the same
counter-based RNG and are tested to produce bitwise-identical output.
"""

import os

from .errors import ValidationError

_requested = os.environ.get("DREAM_BACKEND", "auto").strip().lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ValidationError(
        f"DREAM_BACKEND must be one of auto|numba|numpy, got {_requested!r}"
    )

if _requested in ("auto", "numba"):
    try:
        import numba  # noqa: F401

        ACTIVE_BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise ValidationError("DREAM_BACKEND=numba but numba is not importable")
        ACTIVE_BACKEND = "numpy"
else:
    ACTIVE_BACKEND = "numpy"
