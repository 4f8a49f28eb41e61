import numpy as np
from scipy.integrate import solve_ivp

from .errors import StepFailure

METHOD = "DOP853"
RTOL = 1e-10
ATOL = 1e-12


def integrate(rhs, t0, y0, t_eval, rtol=RTOL, atol=ATOL, breakpoints=(), check=None):
    """Integrate ``y' = rhs(t, y)`` forward from ``t0`` and sample at ``t_eval``.

    The integration restarts at every breakpoint so that kinks in the right
    hand side (piecewise-smooth forcing) never fall inside a step.  ``check``
    is called with ``(times, samples)`` after each segment and may raise.

    Returns an array of shape ``(len(t_eval), len(y0))``.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    y = np.asarray(y0, dtype=float)
    if len(t_eval) and t_eval[0] < t0:
        raise ValueError("t_eval must start at or after t0")
    t_end = float(t_eval[-1]) if len(t_eval) else float(t0)
    bps = np.asarray(breakpoints, dtype=float)
    bps = bps[(bps > t0) & (bps < t_end)]
    edges = np.concatenate([[t0], np.sort(bps), [t_end]])

    out = np.empty((len(t_eval), len(y)))
    j = 0
    while j < len(t_eval) and t_eval[j] == t0:
        out[j] = y
        j += 1
    for ta, tb in zip(edges[:-1], edges[1:]):
        if tb <= ta:
            continue
        k = np.searchsorted(t_eval, tb, side="right")
        pts = t_eval[j:k]
        ext = pts if len(pts) and pts[-1] == tb else np.append(pts, tb)
        sol = solve_ivp(rhs, (ta, tb), y, method=METHOD, t_eval=ext,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise StepFailure(f"integration failed on [{ta:g}, {tb:g}]: {sol.message}")
        if len(pts):
            out[j:k] = sol.y[:, :len(pts)].T
            if check is not None:
                check(pts, out[j:k])
        y = sol.y[:, -1]
        j = k
    return out
