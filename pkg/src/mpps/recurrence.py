"""Concrete Poisson stable building blocks.

A chaotic logistic orbit is held piecewise constant on intervals of length
``q`` (a step signal) and fed to the relaxation equation

    theta' = -k * theta + step(t),

whose bounded solution ``theta`` is continuous, bounded by ``sup(step)/k``
and inherits the near-returns of the orbit.  The infinite history of the
bounded solution is truncated at the start of the step signal with initial
state ``step(start)/k``; the induced error decays like ``exp(-k (t - start))``
so evaluations should sit at least ``30/k`` past the start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotFound, OutOfRange
from .serialize import read_csv, write_csv

# minimum distance past the truncation point, in units of 1/k
BURN_IN_FACTOR = 30.0


# -- logistic orbits ----------------------------------------------------------

@dataclass(frozen=True)
class LogisticOrbit:
    """Forward orbit ``values[n+1] = mu * values[n] * (1 - values[n])``."""

    mu: float
    seed: float
    values: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.values)

    def to_csv(self, path):
        return write_csv(path, ["n", "eta"], [np.arange(len(self.values)), self.values])

    @classmethod
    def from_csv(cls, path, mu=float("nan")):
        _, data = read_csv(path)
        values = data[:, 1].copy()
        return cls(mu=mu, seed=float(values[0]), values=values)


def iterate_logistic(mu, seed, n):
    """Iterate the logistic map ``n`` times starting from ``seed``.

    Returns an orbit of length ``n + 1``.  Iteration happens in plain float64;
    chaotic orbits are therefore not bit-reproducible across platforms beyond
    a few dozen iterates.
    """
    mu = float(mu)
    x = float(seed)
    if not 0.0 <= mu <= 4.0:
        raise ValueError(f"mu={mu} outside [0, 4]")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"seed={x} outside [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    values = np.empty(n + 1)
    values[0] = x
    for i in range(1, n + 1):
        x = mu * x * (1.0 - x)
        values[i] = x
    values.setflags(write=False)
    return LogisticOrbit(mu=mu, seed=float(seed), values=values)


# -- near-return sequences ----------------------------------------------------

@dataclass(frozen=True)
class PoissonSequence:
    """Divergent sequence of (approximate) return times.

    ``precisions[k]`` is the certified bound for entry ``k``: the matched
    window deviates by less than it.  ``errors[k]`` is the deviation actually
    achieved.  ``shifts`` holds the integer orbit shifts when the sequence was
    mined from an orbit; ``times`` are in the caller's time units.
    """

    times: np.ndarray
    precisions: np.ndarray
    window: int = 0
    errors: np.ndarray | None = None
    shifts: np.ndarray | None = None
    offset: int = 0

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    def scaled(self, q):
        """Convert orbit shifts to times for a step signal with interval ``q``."""
        base = self.shifts if self.shifts is not None else self.times
        return PoissonSequence(
            times=np.asarray(base, dtype=float) * q,
            precisions=self.precisions,
            window=self.window,
            errors=self.errors,
            shifts=self.shifts,
            offset=self.offset,
        )

    def subsequence(self, mask):
        mask = np.asarray(mask)
        return PoissonSequence(
            times=self.times[mask],
            precisions=self.precisions[mask],
            window=self.window,
            errors=None if self.errors is None else self.errors[mask],
            shifts=None if self.shifts is None else self.shifts[mask],
            offset=self.offset,
        )

    def to_csv(self, path):
        n = len(self.times)
        shifts = self.shifts if self.shifts is not None else np.full(n, -1)
        errors = self.errors if self.errors is not None else np.full(n, np.nan)
        return write_csv(
            path,
            ["k", "t_k", "shift", "delta", "error"],
            [np.arange(n), self.times, shifts.astype(int), self.precisions, errors],
        )

    @classmethod
    def from_csv(cls, path):
        header, data = read_csv(path)
        col = {name: i for i, name in enumerate(header)}
        times = data[:, col["t_k"]]
        n = len(times)
        precisions = data[:, col["delta"]] if "delta" in col else np.full(n, np.nan)
        errors = data[:, col["error"]] if "error" in col else None
        shifts = None
        if "shift" in col and np.all(data[:, col["shift"]] >= 0):
            shifts = data[:, col["shift"]].astype(int)
        return cls(times=times, precisions=precisions, errors=errors, shifts=shifts)


def detect_poisson_sequence(orbit, window, deltas, offset=0):
    """Mine near-returns of ``orbit`` at successively tighter precisions.

    For each ``delta`` the smallest shift ``z`` beyond the previous entry with
    ``max_{0 <= i < window} |eta[offset+i+z] - eta[offset+i]| < delta`` is
    returned.  ``offset`` lets the match window skip an initial transient.

    Raises
    ------
    NotFound
        If some precision cannot be certified within the orbit.  The caller
        should lengthen the orbit; precisions are never relaxed.
    """
    eta = np.asarray(orbit.values if hasattr(orbit, "values") else orbit, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(eta) - offset < 10 * window:
        raise ValueError("orbit must be at least 10 * window long past the offset")
    if deltas.ndim != 1 or len(deltas) == 0 or np.any(deltas <= 0):
        raise ValueError("deltas must be a non-empty list of positive numbers")
    if np.any(np.diff(deltas) >= 0):
        raise ValueError("deltas must be strictly decreasing")

    ref = eta[offset:offset + window]
    max_shift = len(eta) - offset - window
    shifts, errors = [], []
    prev = 0
    for delta in deltas:
        cand = np.arange(prev + 1, max_shift + 1)
        for i in range(window):
            if len(cand) == 0:
                break
            dev = np.abs(eta[offset + i + cand] - ref[i])
            cand = cand[dev < delta]
        if len(cand) == 0:
            raise NotFound(delta, max_shift - prev)
        z = int(cand[0])
        err = float(np.max(np.abs(eta[offset + z:offset + z + window] - ref)))
        shifts.append(z)
        errors.append(err)
        prev = z
    shifts = np.array(shifts)
    return PoissonSequence(
        times=shifts.astype(float),
        precisions=deltas.copy(),
        window=int(window),
        errors=np.array(errors),
        shifts=shifts,
        offset=int(offset),
    )


# -- step and relaxation signals ---------------------------------------------

@dataclass(frozen=True)
class StepSignal:
    """Orbit values held constant on ``[origin + i q, origin + (i+1) q)``."""

    p: float
    q: float
    values: np.ndarray = field(repr=False)
    origin: float = 0.0

    @property
    def start(self):
        return self.origin

    @property
    def end(self):
        return self.origin + len(self.values) * self.q

    def index(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.floor((t - self.origin) / self.q).astype(np.int64)
        bad = (idx < 0) | (idx >= len(self.values))
        if np.any(bad):
            first = t[bad].flat[0] if t.ndim else float(t)
            raise OutOfRange(float(first), self.start, self.end)
        return idx

    def __call__(self, t):
        out = self.values[self.index(t)]
        return float(out) if np.ndim(t) == 0 else out

    def breakpoints(self, t0, t1):
        """Interval boundaries strictly inside ``(t0, t1)``."""
        i0 = max(math.floor((t0 - self.origin) / self.q) + 1, 0)
        i1 = min(math.ceil((t1 - self.origin) / self.q) - 1, len(self.values))
        b = self.origin + self.q * np.arange(i0, i1 + 1)
        return b[(b > t0) & (b < t1)]

    def to_csv(self, path, t):
        t = np.asarray(t, dtype=float)
        return write_csv(path, ["t", "value"], [t, self(t)])


def build_step_signal(orbit, q, origin=0.0):
    if not q > 0:
        raise ValueError("q must be positive")
    values = np.asarray(orbit.values if hasattr(orbit, "values") else orbit, dtype=float)
    mu = getattr(orbit, "mu", float("nan"))
    return StepSignal(p=mu, q=float(q), values=values, origin=float(origin))


@dataclass(frozen=True)
class ThetaSignal:
    """Bounded solution of ``theta' = -decay * theta + forcing(t)``.

    ``states[i]`` is the value at the left end of forcing interval ``i``;
    inside an interval the solution is the exact exponential relaxation
    towards ``forcing_i / decay``.
    """

    decay: float
    forcing: StepSignal = field(repr=False)
    states: np.ndarray = field(repr=False)

    @property
    def start(self):
        return self.forcing.start

    @property
    def end(self):
        return self.forcing.end

    @property
    def settled(self):
        """Earliest time at which the truncation error is below exp(-30)."""
        return self.start + BURN_IN_FACTOR / self.decay

    def sup_bound(self):
        return float(np.max(np.abs(self.forcing.values))) / self.decay

    def __call__(self, t):
        k, q, origin = self.decay, self.forcing.q, self.forcing.origin
        if np.ndim(t) == 0:
            t = float(t)
            i = math.floor((t - origin) / q)
            if i < 0 or i >= len(self.forcing.values):
                raise OutOfRange(t, self.start, self.end)
            dt = t - (origin + i * q)
            target = self.forcing.values[i] / k
            return target + (self.states[i] - target) * math.exp(-k * dt)
        t = np.asarray(t, dtype=float)
        i = self.forcing.index(t)
        dt = t - (origin + i * q)
        target = self.forcing.values[i] / k
        return target + (self.states[i] - target) * np.exp(-k * dt)

    def derivative(self, t):
        """Closed-form derivative ``-decay * theta + forcing``."""
        return -self.decay * self(t) + self.forcing(t)

    def breakpoints(self, t0, t1):
        return self.forcing.breakpoints(t0, t1)

    def to_csv(self, path, t):
        t = np.asarray(t, dtype=float)
        return write_csv(path, ["t", "value"], [t, self(t)])


def build_theta(forcing, k, initial=None):
    """Relaxation signal driven by ``forcing`` with decay rate ``k``.

    ``initial`` overrides the truncation state (default ``forcing(start)/k``).
    """
    k = float(k)
    if not k > 0:
        raise ValueError("k must be positive")
    eta = forcing.values
    decay = math.exp(-k * forcing.q)
    states = np.empty(len(eta) + 1)
    states[0] = eta[0] / k if initial is None else float(initial)
    for i, e in enumerate(eta):
        target = e / k
        states[i + 1] = target + (states[i] - target) * decay
    states.setflags(write=False)
    return ThetaSignal(decay=k, forcing=forcing, states=states)


def theta_sample_grid(theta, a, b, per_interval=40):
    """Sampling grid for sup estimates: ``per_interval`` points per forcing
    interval plus every breakpoint and both ends of ``[a, b]``."""
    n_int = max(1, math.ceil((b - a) / theta.forcing.q))
    dense = np.linspace(a, b, n_int * per_interval + 1)
    return np.unique(np.concatenate([dense, theta.breakpoints(a, b), [a, b]]))


def verify_theta_poisson(theta, seq, interval, eps, per_interval=40, tail=None):
    """Check ``sup_[a,b] |theta(t + t_n) - theta(t)| < eps`` along ``seq``.

    Between breakpoints the difference of two shifted relaxation signals is
    monotone, so the breakpoint-augmented grid captures the true sup.
    """
    from .analysis import verify_poisson

    a, b = interval
    grid = theta_sample_grid(theta, a, b, per_interval)
    return verify_poisson(theta, seq, interval, eps, grid=grid, tail=tail)
