"""Hot event-stream kernels with numba/numpy lane selection.

Re-exports the active lane's functions; see ``dream.backend`` for the
``DREAM_BACKEND`` env flag.  Dense linear algebra elsewhere in the
package stays on numpy/BLAS in both lanes.
"""

from ..backend import ACTIVE_BACKEND

if ACTIVE_BACKEND == "numba":
    from . import numba_impl as impl
else:
    from . import numpy_impl as impl

from .numpy_impl import (  # noqa: F401  (codes are lane-independent)
    EFF_BUMP,
    EFF_CONSTANT,
    EFF_EXPDECAY,
    EFF_LINEAR,
    EFF_QUADRATIC,
    EFF_SINE,
    SRC_OUT_COUNT,
    SRC_RECV_COUNT,
    SRC_SENDER_ATTR,
    SRC_RECEIVER_ATTR,
    SRC_TIME_SINCE,
    effect_values,
)

draw_events = impl.draw_events
draw_controls = impl.draw_controls
pair_covariates = impl.pair_covariates
rng_unit_stream = impl.rng_unit_stream
