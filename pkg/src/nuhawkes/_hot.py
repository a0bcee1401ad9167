"""Hot-kernel dispatch: numba implementations or their pure twins.

Import the simulation/solver kernels from here; the backend is fixed at
import time by ``NUH_PURE_NUMPY`` (see `_backend`).
"""

from __future__ import annotations

from ._backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from . import _loops as _impl
else:
    from . import _fallback as _impl

OK = _impl.OK
CAP_EXCEEDED = _impl.CAP_EXCEEDED
BOUND_VIOLATION = _impl.BOUND_VIOLATION

renewal_exp = _impl.renewal_exp
renewal_general = _impl.renewal_general
thin_exp_summary = _impl.thin_exp_summary
thin_exp_path = _impl.thin_exp_path
thin_powerlaw_path = _impl.thin_powerlaw_path
thin_biv_summary = _impl.thin_biv_summary
thin_biv_path = _impl.thin_biv_path
intensity_at_events = _impl.intensity_at_events
biv_intensity_at_events = _impl.biv_intensity_at_events
geom_sums = _impl.geom_sums
cir_path_exact = _impl.cir_path_exact
cir_path_euler = _impl.cir_path_euler
cir_step_single = _impl.cir_step_single
poisson_scalar = _impl.poisson_scalar
