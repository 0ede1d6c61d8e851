"""Backend selection for the hot ODE kernel.

The compiled Cython core is used when available; setting the environment
variable ``KDVIST_PURE_PYTHON=1`` (or a failed build) falls back to the
vectorized numpy implementation.  Both expose ``integrate_batch`` with the
same contract.
"""

import os

if os.environ.get("KDVIST_PURE_PYTHON"):
    from . import _purepy as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        from . import _purepy as _impl

BACKEND = _impl.NAME
integrate_batch = _impl.integrate_batch
