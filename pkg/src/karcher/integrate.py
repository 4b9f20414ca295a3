"""Thin wrapper around scipy's adaptive Runge-Kutta integration.

All geodesic, transport and Jacobi-field ODEs in the package go through
``solve_ode`` so they share one accuracy setting.
"""

import numpy as np
from scipy.integrate import solve_ivp

from .errors import GeodesicError

# Per-step tolerances for every ODE in the package.  Tighter than the
# headline 1e-10 accuracy target so that downstream finite differences
# and shooting iterations keep comfortable margins.
ODE_RTOL = 1e-12
ODE_ATOL = 1e-13


def solve_ode(rhs, t_span, y0, t_eval=None, dense_output=False):
    """Integrate ``y' = rhs(t, y)`` and return the scipy solution object.

    Raises GeodesicError if the integrator reports failure.
    """
    y0 = np.asarray(y0, dtype=float)
    if t_span[1] == t_span[0]:
        # Degenerate interval: scipy handles it, but short-circuit to keep
        # dense evaluation well defined.
        sol = solve_ivp(rhs, (t_span[0], t_span[0] + 1e-300), y0,
                        method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL,
                        dense_output=dense_output)
        return sol
    sol = solve_ivp(rhs, t_span, y0, method="DOP853",
                    rtol=ODE_RTOL, atol=ODE_ATOL,
                    t_eval=t_eval, dense_output=dense_output)
    if not sol.success:
        raise GeodesicError(f"ODE integration failed: {sol.message}")
    return sol
