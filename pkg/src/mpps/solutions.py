"""Bounded solutions of linear and quasilinear systems with MPPS forcing.

Systems have the form

    x' = A(t) x + D(t) x + g(t, x) + phi(t) + psi(t)

with ``A`` periodic and exponentially stable, ``phi`` periodic, ``psi``
Poisson stable, optional Lipschitz nonlinearity ``g`` and optional Poisson
stable matrix perturbation ``D``.  Improper integrals over ``(-inf, t]`` are
replaced by forward integration from a burn-in start with zero state; the
truncation error carries a factor ``exp(-alpha * burn_in)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from ._integrate import ATOL, RTOL, integrate
from .analysis import shift_spectrum
from .errors import (ConditionFailed, CoverageError, DomainExit, NoContraction,
                     SingularPeriodMap)
from .floquet import PeriodicMatrixFn, multipliers
from .serialize import read_csv, write_csv, write_json

BURN_IN_FACTOR = 40.0
SINGULAR_COND = 1e12


# -- trajectories -------------------------------------------------------------

@dataclass
class Trajectory:
    """Vector samples on the uniform grid ``t0 + dt * i``."""

    t0: float
    dt: float
    samples: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def t_end(self):
        return self.t0 + self.dt * (len(self.samples) - 1)

    @property
    def dim(self):
        return self.samples.shape[1]

    def __len__(self):
        return len(self.samples)

    def __call__(self, t):
        """Linear interpolation; raises ``CoverageError`` outside the grid."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        pos = (t - self.t0) / self.dt
        n = len(self.samples)
        eps = 1e-9
        if np.any(pos < -eps) or np.any(pos > n - 1 + eps):
            bad = t[(pos < -eps) | (pos > n - 1 + eps)][0]
            raise CoverageError(
                f"t={bad:.10g} outside trajectory range [{self.t0:.10g}, {self.t_end:.10g}]"
            )
        pos = np.clip(pos, 0, n - 1)
        i = np.minimum(np.floor(pos).astype(np.int64), n - 2) if n > 1 else np.zeros_like(pos, int)
        w = (pos - i)[:, None]
        if n == 1:
            out = np.repeat(self.samples, len(t), axis=0)
        else:
            out = (1 - w) * self.samples[i] + w * self.samples[i + 1]
        return out[0] if scalar else out

    def window(self, a, b):
        times = self.times
        keep = (times >= a - 1e-9 * self.dt) & (times <= b + 1e-9 * self.dt)
        first = int(np.argmax(keep))
        return Trajectory(float(times[first]), self.dt, self.samples[keep], dict(self.metadata))

    def sup_norm(self):
        return float(np.max(np.abs(self.samples)))

    def __add__(self, other):
        if len(self) != len(other) or abs(self.t0 - other.t0) > 1e-12 or abs(self.dt - other.dt) > 1e-15:
            raise ValueError("trajectories live on different grids")
        return Trajectory(self.t0, self.dt, self.samples + other.samples, dict(self.metadata))

    def to_csv(self, path):
        header = ["t"] + [f"x{i + 1}" for i in range(self.dim)]
        return write_csv(path, header, [self.times] + [self.samples[:, i] for i in range(self.dim)])

    @classmethod
    def from_csv(cls, path):
        header, data = read_csv(path)
        if data.shape[0] < 2:
            raise CoverageError(f"{path}: trajectory needs at least two rows")
        t = data[:, 0]
        dt = (t[-1] - t[0]) / (len(t) - 1)
        if not np.allclose(np.diff(t), dt, rtol=1e-6, atol=1e-12):
            raise CoverageError(f"{path}: trajectory grid is not uniform")
        return cls(float(t[0]), float(dt), data[:, 1:], {"source": str(path)})


def uniform_grid(t0, t1, dt):
    """Uniform grid from ``t0`` to ``t1`` with spacing at most ``dt``."""
    n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    return np.linspace(t0, t1, n + 1)


# -- forcing and systems ------------------------------------------------------

@dataclass(frozen=True)
class ThetaPowers:
    """Poisson component ``psi_i(t) = sum_j c_ij * theta(t) ** p_ij``."""

    theta: object
    terms: tuple  # per component: tuple of (coefficient, power)

    @property
    def dim(self):
        return len(self.terms)

    def __call__(self, t):
        th = self.theta(t)
        if np.ndim(th) == 0:
            return np.array([sum(c * th**p for c, p in comp) for comp in self.terms])
        th = np.asarray(th)
        return np.stack([sum((c * th**p for c, p in comp), np.zeros_like(th))
                         for comp in self.terms], axis=-1)

    def breakpoints(self, t0, t1):
        return self.theta.breakpoints(t0, t1)

    def sup_bound(self):
        s = self.theta.sup_bound()
        return max(sum(abs(c) * s**p for c, p in comp) for comp in self.terms)

    def theta_lipschitz(self):
        """Bound on ``|d psi_i / d theta|`` over ``0 <= theta <= sup``."""
        s = self.theta.sup_bound()
        return max(sum(abs(c) * p * s ** max(p - 1, 0) for c, p in comp) for comp in self.terms)


@dataclass(frozen=True)
class MppsForcing:
    """Sum of an ``omega``-periodic part ``phi`` and a Poisson part ``psi``.

    Either part may be ``None`` (identically zero).  Both accept a scalar
    time (returning shape ``(dim,)``) or an array of times (``(len, dim)``).
    """

    dim: int
    omega: float
    phi: Callable | None = None
    psi: Callable | None = None
    m_phi: float | None = None
    m_psi: float | None = None
    sequence: object = None

    def phi_at(self, t):
        return _eval_part(self.phi, t, self.dim)

    def psi_at(self, t):
        return _eval_part(self.psi, t, self.dim)

    def __call__(self, t):
        return self.phi_at(t) + self.psi_at(t)

    def breakpoints(self, t0, t1):
        bp = getattr(self.psi, "breakpoints", None)
        return np.empty(0) if bp is None else bp(t0, t1)

    def sampled_bounds(self, t_range=None, samples=4000):
        """Sampled ``sup ||phi||`` (one period) and ``sup ||psi||`` over ``t_range``."""
        tp = np.linspace(0.0, self.omega, samples, endpoint=False)
        s_phi = float(np.max(np.abs(self.phi_at(tp)))) if self.phi is not None else 0.0
        s_psi = 0.0
        if self.psi is not None:
            if t_range is None:
                th = getattr(self.psi, "theta", None)
                t_range = (th.settled, th.settled + 200.0) if th is not None else (0.0, 200.0)
            s_psi = float(np.max(np.abs(self.psi_at(np.linspace(*t_range, samples)))))
        return s_phi, s_psi

    def bounds(self):
        """Declared bounds, falling back to sampled (or analytic) ones."""
        s_phi, s_psi = None, None
        if self.m_phi is None or self.m_psi is None:
            s_phi, s_psi = self.sampled_bounds()
            if hasattr(self.psi, "sup_bound"):
                s_psi = self.psi.sup_bound()
        m_phi = self.m_phi if self.m_phi is not None else s_phi
        m_psi = self.m_psi if self.m_psi is not None else s_psi
        return float(m_phi), float(m_psi)

    def phi_period_defect(self, samples=256):
        if self.phi is None:
            return 0.0
        t = np.linspace(-5 * self.omega, 5 * self.omega, samples)
        return float(np.max(np.abs(self.phi_at(t + self.omega) - self.phi_at(t))))


def _eval_part(part, t, dim):
    if part is None:
        return np.zeros(dim) if np.ndim(t) == 0 else np.zeros((len(t), dim))
    return np.asarray(part(t), dtype=float)


@dataclass(frozen=True)
class QuasilinearSystem:
    """``x' = (A(t) + D(t)) x + g(t, x) + phi(t) + psi(t)``.

    ``g`` (metadata ``lipschitz``, ``m_g``, ``H``) and ``D`` (metadata ``d``,
    a bound on ``sup ||D(t)||``) are optional; without them the system is
    linear.  The metadata are inputs, verified by sampling.
    """

    A: PeriodicMatrixFn
    forcing: MppsForcing
    g: Callable | None = None
    lipschitz: float = 0.0
    m_g: float = 0.0
    H: float = math.inf
    D: Callable | None = None
    d: float = 0.0
    name: str = ""

    @property
    def dim(self):
        return self.A.dim

    @property
    def omega(self):
        return self.A.omega

    @property
    def is_linear(self):
        return self.g is None and self.D is None

    def nonlinear_part(self, t, x):
        """``D(t) x + g(t, x)`` (zero for linear systems)."""
        out = np.zeros(self.dim)
        if self.g is not None:
            out = out + np.asarray(self.g(t, x), dtype=float)
        if self.D is not None:
            out = out + np.asarray(self.D(t), dtype=float) @ x
        return out

    def rhs(self, t, x):
        return self.A(t) @ x + self.nonlinear_part(t, x) + self.forcing(t)

    def sampled_lipschitz(self, pairs=2000, seed=0, t_range=None):
        """Largest ``||g(t,x1) - g(t,x2)|| / ||x1 - x2||`` over random pairs in the H-ball."""
        if self.g is None:
            return 0.0
        rng = np.random.default_rng(seed)
        r = self.H if math.isfinite(self.H) else 10.0
        t_lo, t_hi = t_range or (0.0, self.omega)
        worst = 0.0
        for _ in range(pairs):
            t = rng.uniform(t_lo, t_hi)
            x1 = rng.uniform(-r, r, self.dim) * 0.999
            x2 = x1 + rng.normal(scale=r * 10.0 ** rng.uniform(-4, 0), size=self.dim)
            x2 = np.clip(x2, -r * 0.999, r * 0.999)
            dx = np.max(np.abs(x1 - x2))
            if dx == 0:
                continue
            dg = np.max(np.abs(np.asarray(self.g(t, x1)) - np.asarray(self.g(t, x2))))
            worst = max(worst, dg / dx)
        return float(worst)

    def sampled_m_g(self, samples=4000, seed=1):
        if self.g is None:
            return 0.0
        rng = np.random.default_rng(seed)
        r = self.H if math.isfinite(self.H) else 10.0
        worst = 0.0
        for _ in range(samples):
            t = rng.uniform(0.0, self.omega)
            x = rng.uniform(-r, r, self.dim) * 0.999
            worst = max(worst, float(np.max(np.abs(self.g(t, x)))))
        return worst

    def g_period_defect(self, samples=256, seed=2):
        if self.g is None:
            return 0.0
        rng = np.random.default_rng(seed)
        r = self.H if math.isfinite(self.H) else 10.0
        worst = 0.0
        for _ in range(samples):
            t = rng.uniform(-5 * self.omega, 5 * self.omega)
            x = rng.uniform(-r, r, self.dim) * 0.999
            diff = np.asarray(self.g(t + self.omega, x)) - np.asarray(self.g(t, x))
            worst = max(worst, float(np.max(np.abs(diff))))
        return worst


def default_dt(sys_or_forcing, omega):
    """Grid step ``min(omega/200, q/20)``."""
    forcing = getattr(sys_or_forcing, "forcing", sys_or_forcing)
    dt = omega / 200.0
    theta = getattr(forcing.psi, "theta", None)
    if theta is not None:
        dt = min(dt, theta.forcing.q / 20.0)
    return dt


def _burn_in(fd, burn_in):
    if burn_in is not None:
        return float(burn_in)
    alpha = fd.alpha if fd.alpha is not None else fd.decay_rate * 0.99
    return BURN_IN_FACTOR / alpha


# -- conditions ---------------------------------------------------------------

@dataclass
class ConditionEntry:
    applicable: bool
    satisfied: bool | None = None
    lhs: float | None = None
    rhs: float | None = None
    detail: str = ""

    def to_dict(self):
        return {"applicable": self.applicable, "satisfied": self.satisfied,
                "lhs": self.lhs, "rhs": self.rhs, "detail": self.detail}


CONDITION_NAMES = tuple(f"C{i}" for i in range(1, 12))


@dataclass
class ConditionReport:
    entries: dict
    constants: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.entries[name]

    def failed(self):
        return [n for n, e in self.entries.items() if e.applicable and e.satisfied is False]

    @property
    def all_satisfied(self):
        return not self.failed()

    def to_dict(self):
        return {"conditions": {n: e.to_dict() for n, e in self.entries.items()},
                "constants": self.constants, "failed": self.failed(),
                "warnings": list(self.warnings)}

    def to_json(self, path):
        return write_json(path, self.to_dict())


def _numeric(lhs, rhs, detail):
    if lhs is None or rhs is None:
        return ConditionEntry(True, False, detail=detail + " (no decay pair available)")
    return ConditionEntry(True, bool(lhs < rhs), float(lhs), float(rhs), detail)


def check_conditions(sys, fd, sequence=None, period_tol=1e-10, cluster_radius=None):
    """Numeric verdicts for the hypotheses of the existence theorems.

    ``fd`` holds the multipliers and the decay pair of the periodic linear
    part (``A`` for systems without ``D``; the periodic part ``B`` otherwise).
    Conditions that do not apply to ``sys`` are marked not applicable.
    """
    e = {}
    forcing = sys.forcing
    seq = sequence if sequence is not None else forcing.sequence
    m_phi, m_psi = forcing.bounds()
    K, alpha = fd.K, fd.alpha
    has_d = sys.D is not None

    defect = sys.A.period_defect()
    e["C1"] = ConditionEntry(True, defect <= period_tol, defect, period_tol,
                             "sampled max ||A(t+omega) - A(t)||")
    phi_defect = forcing.phi_period_defect()
    psi_ok = forcing.psi is None or seq is not None
    e["C2"] = ConditionEntry(True, bool(phi_defect <= period_tol and psi_ok), phi_defect,
                             period_tol, "phi period defect; psi carries a Poisson sequence"
                             if psi_ok else "psi has no Poisson sequence")
    if forcing.psi is None:
        e["C3"] = ConditionEntry(False, detail="no Poisson component")
    elif seq is None:
        e["C3"] = ConditionEntry(True, False, detail="no Poisson sequence to estimate from")
    else:
        spec = shift_spectrum(seq, sys.omega, cluster_radius)
        e["C3"] = ConditionEntry(True, spec.kappa_zero, spec.kappa, spec.radius,
                                 "Poisson number estimated from residue clusters")

    rho = float(np.max(np.abs(fd.multipliers)))
    stab = ConditionEntry(True, rho < 1.0, rho, 1.0, "max multiplier modulus")
    e["C4"] = stab if not has_d else ConditionEntry(False, detail="see C9")

    quasi = sys.g is not None
    m_g = sys.m_g if quasi else 0.0
    if quasi:
        pd = sys.g_period_defect()
        e["C5"] = ConditionEntry(True, pd <= period_tol, pd, period_tol,
                                 "sampled max ||g(t+omega,x) - g(t,x)||")
        lip = sys.sampled_lipschitz()
        e["C6"] = ConditionEntry(True, lip <= sys.lipschitz * (1 + 1e-9), lip, sys.lipschitz,
                                 "sampled Lipschitz ratio vs declared L")
    else:
        e["C5"] = ConditionEntry(False, detail="no nonlinearity")
        e["C6"] = ConditionEntry(False, detail="no nonlinearity")

    total = m_g + m_phi + m_psi
    paired = K is not None and alpha is not None

    def scaled(x):
        return K * x if paired else None

    if quasi and not has_d:
        e["C7"] = _numeric(scaled(total / sys.H), alpha, "K (m_g + m_phi + m_psi) / H < alpha")
        e["C8"] = _numeric(scaled(sys.lipschitz), alpha, "K L < alpha")
    else:
        e["C7"] = ConditionEntry(False, detail="requires a nonlinearity and no D")
        e["C8"] = ConditionEntry(False, detail="requires a nonlinearity and no D")

    if has_d:
        e["C9"] = ConditionEntry(True, rho < 1.0, rho, 1.0, "max multiplier modulus of B")
        e["C10"] = _numeric(scaled(sys.lipschitz + sys.d), alpha, "D (L + d) < beta")
        e["C11"] = _numeric(scaled(total / sys.H), alpha - K * sys.d if paired else None,
                            "D (m_g + m_phi + m_psi) / H < beta - D d")
    else:
        for n in ("C9", "C10", "C11"):
            e[n] = ConditionEntry(False, detail="requires a Poisson stable coefficient D")

    constants = {"K": K, "alpha": alpha, "constants_source": fd.source,
                 "m_g": m_g, "m_phi": m_phi, "m_psi": m_psi, "H": sys.H,
                 "L": sys.lipschitz, "d": sys.d}
    return ConditionReport(entries={n: e[n] for n in CONDITION_NAMES}, constants=constants)


# -- linear systems -----------------------------------------------------------

def _require_stable(fd):
    if not fd.c4_satisfied:
        raise ConditionFailed(
            f"multiplier of modulus {np.max(np.abs(fd.multipliers)):.6g} >= 1"
        )


def periodic_initial_state(A, phi, dim, tol=RTOL, atol=ATOL, fd=None):
    """Initial value of the periodic solution of ``x' = A x + phi``.

    Solves ``(I - X(omega, 0)) x0 = int_0^omega X(omega, s) phi(s) ds`` by LU
    with partial pivoting.
    """
    fd = fd or multipliers(A, tol, atol)
    omega = A.omega
    eye = np.eye(dim)
    gap = eye - fd.monodromy
    sv = np.linalg.svd(gap, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
    # a uniformly tiny gap is well conditioned yet below integration noise
    if not np.isfinite(cond) or cond > SINGULAR_COND or sv[-1] < 100 * tol:
        raise SingularPeriodMap(
            f"cond(I - X(omega,0)) = {cond:.3g}, smallest singular value {sv[-1]:.3g}"
        )

    def rhs(t, y):
        return A(t) @ y + phi(t)

    forced = integrate(rhs, 0.0, np.zeros(dim), [omega], tol, atol)[0]
    return scipy.linalg.lu_solve(scipy.linalg.lu_factor(gap), forced)


def bounded_solution_linear(A, forcing, window, tol=RTOL, dt=None, burn_in=None,
                            fd=None, atol=ATOL):
    """Bounded solution of ``x' = A(t) x + phi(t) + psi(t)`` on ``window``.

    Returns ``(x, x_phi, x_psi)`` on a common uniform grid.  ``x_phi`` is the
    periodic solution driven by ``phi``; ``x_psi`` is obtained by forward
    integration from ``window[0] - burn_in`` with zero state (default burn-in
    ``40 / alpha``).
    """
    fd = fd or multipliers(A, tol, atol)
    _require_stable(fd)
    n = A.dim
    t0, t1 = map(float, window)
    dt = dt or default_dt(forcing, A.omega)
    grid = uniform_grid(t0, t1, dt)
    step = grid[1] - grid[0] if len(grid) > 1 else dt

    x_phi = np.zeros((len(grid), n))
    if forcing.phi is not None:
        x0 = periodic_initial_state(A, forcing.phi_at, n, tol, atol, fd)
        res = np.fmod(grid, A.omega)
        res = np.where(res < 0, res + A.omega, res)
        uniq, inv = np.unique(res, return_inverse=True)

        def rhs_phi(t, y):
            return A(t) @ y + forcing.phi_at(t)

        x_phi = integrate(rhs_phi, 0.0, x0, uniq, tol, atol)[inv]

    tb = _burn_in(fd, burn_in)
    x_psi = np.zeros((len(grid), n))
    if forcing.psi is not None:
        def rhs_psi(t, y):
            return A(t) @ y + forcing.psi_at(t)

        start = t0 - tb
        x_psi = integrate(rhs_psi, start, np.zeros(n), grid, tol, atol,
                          breakpoints=forcing.breakpoints(start, t1))

    meta = {"kind": "bounded_linear", "burn_in": tb, "rtol": tol, "atol": atol}
    traj = lambda s, part: Trajectory(t0, step, s, {**meta, "part": part})  # noqa: E731
    return traj(x_phi + x_psi, "x"), traj(x_phi, "x_phi"), traj(x_psi, "x_psi")


def simulate_forward(sys, x0, span, tol=RTOL, dt=None, atol=ATOL):
    """Solution of the full system from ``x(span[0]) = x0``, resampled uniformly.

    Raises ``DomainExit`` when a sample leaves ``||x|| < H`` for systems with a
    nonlinearity defined on that ball.
    """
    x0 = np.asarray(x0, dtype=float)
    t0, t1 = map(float, span)
    if sys.g is not None and math.isfinite(sys.H) and np.max(np.abs(x0)) >= sys.H:
        raise DomainExit(t0, float(np.max(np.abs(x0))), sys.H)
    dt = dt or default_dt(sys, sys.omega)
    grid = uniform_grid(t0, t1, dt)

    check = None
    if sys.g is not None and math.isfinite(sys.H):
        def check(ts, ys):
            norms = np.max(np.abs(ys), axis=1)
            if np.any(norms >= sys.H):
                i = int(np.argmax(norms >= sys.H))
                raise DomainExit(float(ts[i]), float(norms[i]), sys.H)

    samples = integrate(sys.rhs, t0, x0, grid, tol, atol,
                        breakpoints=sys.forcing.breakpoints(t0, t1), check=check)
    step = grid[1] - grid[0] if len(grid) > 1 else dt
    return Trajectory(t0, step, samples, {"kind": "forward", "x0": x0.tolist(),
                                          "rtol": tol, "atol": atol, "system": sys.name})


# -- Picard iteration ---------------------------------------------------------

class _HermiteGrid:
    """Cubic Hermite interpolation of values and slopes on a uniform grid.

    A piecewise-linear iterate would put a kink in the right-hand side at
    every node, which caps the integrator's accuracy near 1e-7; the slopes
    come for free from the ODE that produced the values.
    """

    def __init__(self, t0, dt, values, slopes):
        self.t0, self.dt = t0, dt
        self.values, self.slopes = values, slopes * dt
        self.last = len(values) - 1

    def __call__(self, t):
        pos = (t - self.t0) / self.dt
        i = int(pos)
        if i < 0:
            return self.values[0]
        if i >= self.last:
            return self.values[self.last]
        u = pos - i
        u2 = u * u
        u3 = u2 * u
        return ((2 * u3 - 3 * u2 + 1) * self.values[i] + (u3 - 2 * u2 + u) * self.slopes[i]
                + (3 * u2 - 2 * u3) * self.values[i + 1] + (u3 - u2) * self.slopes[i + 1])


def picard_solve(sys, fd, window, iter_tol=1e-9, max_iter=50, tol=RTOL, burn_in=None,
                 dt=None, atol=ATOL, noise_floor=None):
    """Fixed point of ``nu -> int_{-inf}^t X(t,s) F(s, nu(s)) ds`` on ``window``.

    Starting from ``nu = 0``, each application integrates
    ``y' = A(t) y + F(t, nu(t))`` forward from the burn-in start with zero
    state; ``nu`` is interpolated between grid nodes by cubic Hermite
    polynomials using the slopes of the ODE that produced it.  ``F`` collects
    ``D(t) x + g(t, x) + phi(t) + psi(t)``.

    The returned trajectory's metadata holds the successive sup-distances
    ``d_m = ||nu_{m+1} - nu_m||``, their ratios and the a priori contraction
    bound ``K (L + d) / alpha``.  A distance that stops falling once below
    ``noise_floor`` (default ``1e3 * tol``) ends the iteration with
    ``stalled_at_noise_floor`` set, since sweeps then only reshuffle the
    integrator's own error.
    """
    _require_stable(fd)
    n = sys.dim
    t0, t1 = map(float, window)
    tb = _burn_in(fd, burn_in)
    dt = dt or default_dt(sys, sys.omega)
    win = uniform_grid(t0, t1, dt)
    step = win[1] - win[0] if len(win) > 1 else dt
    back = math.ceil(tb / step - 1e-9)
    grid = np.concatenate([t0 - step * np.arange(back, 0, -1), win])
    start = float(grid[0])
    bps = sys.forcing.breakpoints(start, t1)
    A, forcing = sys.A, sys.forcing
    floor = noise_floor if noise_floor is not None else 1e3 * tol

    nu = np.zeros((len(grid), n))
    slopes = np.zeros_like(nu)
    distances, ratios = [], []
    converged = stalled = False
    for m in range(max_iter):
        prev = _HermiteGrid(start, step, nu, slopes)

        def rhs(t, y, prev=prev):
            return A(t) @ y + sys.nonlinear_part(t, prev(t)) + forcing(t)

        new = integrate(rhs, start, np.zeros(n), grid, tol, atol, breakpoints=bps)
        dist = float(np.max(np.abs(new - nu)))
        distances.append(dist)
        nu = new
        slopes = np.array([rhs(t, y) for t, y in zip(grid, nu)])
        if len(distances) > 1 and distances[-2] > floor:
            ratios.append(dist / distances[-2])
            if ratios[-1] >= 1.0 and dist > floor:
                raise NoContraction(
                    f"distance grew from {distances[-2]:.3e} to {dist:.3e}", distances
                )
        if dist < iter_tol:
            converged = True
            break
        if len(distances) > 1 and dist <= floor and dist >= distances[-2]:
            # below the integrator's resolution further sweeps only add noise
            converged = stalled = True
            break
    if not converged:
        raise NoContraction(f"no convergence within {max_iter} iterations", distances)

    bound = None
    if fd.K is not None and fd.alpha:
        bound = fd.K * (sys.lipschitz + sys.d) / fd.alpha
    keep = np.arange(len(grid)) >= back
    meta = {
        "kind": "picard",
        "iterations": len(distances),
        "stalled_at_noise_floor": stalled,
        "distances": distances,
        "ratios": ratios,
        "max_ratio": max(ratios[1:], default=max(ratios, default=0.0)),
        "contraction_bound": bound,
        "burn_in": tb,
        "rtol": tol,
        "system": sys.name,
    }
    return Trajectory(t0, step, nu[keep], meta)


def solve_mpps_coefficients(sys, fdB, window, iter_tol=1e-9, max_iter=50, tol=RTOL,
                            burn_in=None, dt=None, atol=ATOL):
    """Bounded solution when the coefficient is periodic ``B`` plus Poisson ``D``.

    ``sys.A`` is the periodic part ``B`` and ``fdB`` its multipliers and decay
    pair ``(D, beta)``.  The perturbation ``D(t) x`` is moved into the
    nonlinearity, so the iteration contracts with factor ``D (L + d) / beta``.

    Raises ``ConditionFailed`` when ``D (L + d) < beta`` does not hold.
    """
    if fdB.K is None or fdB.alpha is None:
        raise ValueError("fdB needs a decay pair")
    lhs = fdB.K * (sys.lipschitz + sys.d)
    if not lhs < fdB.alpha:
        raise ConditionFailed(f"D (L + d) = {lhs:.6g} is not below beta = {fdB.alpha:.6g}")
    return picard_solve(sys, fdB, window, iter_tol, max_iter, tol, burn_in, dt, atol)


# -- asymptotic stability -----------------------------------------------------

@dataclass
class GronwallReport:
    times: np.ndarray
    difference: np.ndarray
    bound: np.ndarray
    rate_bound: float
    rate_measured: float
    passed: bool
    K: float
    floor: float

    @property
    def worst_ratio(self):
        return float(np.max(self.difference / (self.bound + self.floor)))

    def to_dict(self):
        return {"rate_bound": self.rate_bound, "rate_measured": self.rate_measured,
                "passed": self.passed, "K": self.K, "floor": self.floor,
                "worst_ratio": self.worst_ratio}


def verify_gronwall_decay(sys, fd, x0, z0, span=(0.0, 10.0), tol=RTOL, dt=None,
                          floor=1e-9, atol=ATOL):
    """Check ``||x - z||(t) <= K exp(-(alpha - K L)(t - t0)) ||x0 - z0||`` pointwise.

    Both solutions are integrated over ``span``; the measured rate is the
    least-squares slope of ``-log ||x - z||`` over the second half.
    """
    x = simulate_forward(sys, x0, span, tol, dt, atol)
    z = simulate_forward(sys, z0, span, tol, dt, atol)
    t = x.times
    diff = np.max(np.abs(x.samples - z.samples), axis=1)
    d0 = float(np.max(np.abs(np.asarray(x0, float) - np.asarray(z0, float))))
    rate = fd.alpha - fd.K * (sys.lipschitz + sys.d)
    bound = fd.K * np.exp(-rate * (t - t[0])) * d0
    passed = bool(np.all(diff <= bound + floor))

    half = t >= t[0] + 0.5 * (t[-1] - t[0])
    use = half & (diff > 1e-13)
    if d0 == 0 or np.count_nonzero(use) < 2:
        measured = math.inf
    else:
        slope = np.polyfit(t[use], np.log(diff[use]), 1)[0]
        measured = float(-slope)
    return GronwallReport(t, diff, bound, float(rate), measured, passed, float(fd.K), floor)
