"""Sampled verification of recurrence properties.

All checks certify the sampled quantifier only: a passing report states
that ``||f(t + t_k) - f(t)|| < eps`` for every grid point ``t`` in ``[a, b]``
and every sequence entry beyond the tail index, not that the true supremum
is below ``eps``.  Vector norms are max-norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionFailed, ConfigurationError, InsufficientRange
from .serialize import write_csv, write_json

MIN_PERIODS = 20


def _times(seq):
    return np.asarray(getattr(seq, "times", seq), dtype=float)


def _norm(values):
    v = np.asarray(values, dtype=float)
    if v.ndim <= 1:
        return np.abs(v)
    return np.max(np.abs(v), axis=tuple(range(1, v.ndim)))


def _grid(interval, grid):
    a, b = interval
    if np.ndim(grid) == 0:
        return np.linspace(a, b, int(grid))
    return np.asarray(grid, dtype=float)


def default_tail(n):
    """Number of leading entries ignored by a verdict (early returns are coarse)."""
    return n // 3


@dataclass
class ConvergenceReport:
    interval: tuple
    shifts: np.ndarray
    sups: np.ndarray
    eps: float
    tail_index: int
    passed: bool
    tail_monotone: bool
    mode: str = "definition"
    target_shift: float = 0.0
    omega: float | None = None
    extra: dict = field(default_factory=dict)

    def residues(self):
        if self.omega is None:
            return np.full(len(self.shifts), np.nan)
        return np.fmod(self.shifts, self.omega)

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "eps": self.eps,
            "mode": self.mode,
            "target_shift": self.target_shift,
            "tail_index": self.tail_index,
            "passed": bool(self.passed),
            "tail_monotone": bool(self.tail_monotone),
            "omega": self.omega,
            "table": [
                {"k": k, "t_k": float(t), "residue": float(r), "sup_deviation": float(s)}
                for k, (t, r, s) in enumerate(zip(self.shifts, self.residues(), self.sups))
            ],
            **self.extra,
        }

    def to_json(self, path):
        return write_json(path, self.to_dict())

    def to_csv(self, path):
        return write_csv(
            path,
            ["k", "t_k", "residue", "sup_deviation"],
            [np.arange(len(self.shifts)), self.shifts, self.residues(), self.sups],
        )

    def summary_lines(self):
        lines = []
        for k, (t, s) in enumerate(zip(self.shifts, self.sups)):
            tag = "tail" if k >= self.tail_index else "skip"
            ok = "ok" if s < self.eps else "--"
            lines.append(f"k={k:3d} t_k={t:.10g} sup={s:.3e} [{tag}] {ok}")
        lines.append(f"verdict: {'PASS' if self.passed else 'FAIL'} (eps={self.eps:g})")
        return lines


def _verdict(interval, shifts, sups, eps, tail, **kw):
    n = len(sups)
    tail = default_tail(n) if tail is None else min(int(tail), n)
    tail_sups = sups[tail:]
    passed = bool(n > tail and np.all(tail_sups < eps))
    monotone = bool(np.all(np.diff(tail_sups) <= 0)) if len(tail_sups) > 1 else True
    return ConvergenceReport(
        interval=tuple(float(x) for x in interval),
        shifts=np.asarray(shifts, dtype=float),
        sups=np.asarray(sups, dtype=float),
        eps=float(eps),
        tail_index=tail,
        passed=passed,
        tail_monotone=monotone,
        **kw,
    )


def verify_poisson(f, seq, interval, eps, grid=1000, tail=None, omega=None):
    """Grid sup of ``||f(t + t_k) - f(t)||`` over ``interval`` for each ``t_k``.

    ``f`` is any callable accepting an array of times and returning an array
    of shape ``(len(t),)`` or ``(len(t), n)``.  ``CoverageError`` from ``f``
    propagates when a shifted evaluation leaves its data range.
    """
    t = _grid(interval, grid)
    base = np.asarray(f(t))
    shifts = _times(seq)
    sups = np.array([np.max(_norm(np.asarray(f(t + tk)) - base)) for tk in shifts])
    return _verdict(interval, shifts, sups, eps, tail, omega=omega)


# -- Poisson shifts modulo a period ------------------------------------------

@dataclass
class Cluster:
    center: float
    members: np.ndarray  # indices into the sequence

    @property
    def count(self):
        return len(self.members)


@dataclass
class ShiftSpectrum:
    omega: float
    residues: np.ndarray
    clusters: list
    kappa: float
    kappa_zero: bool
    radius: float

    def zero_cluster(self):
        for c in self.clusters:
            if _circ_dist(c.center, 0.0, self.omega) < self.radius:
                return c
        return None

    def dominant(self):
        # most members; later entries break ties
        return max(self.clusters, key=lambda c: (c.count, c.members.max()))

    def to_dict(self):
        return {
            "omega": self.omega,
            "residues": self.residues.tolist(),
            "clusters": [
                {"center": c.center, "count": c.count, "members": c.members.tolist()}
                for c in self.clusters
            ],
            "kappa": self.kappa,
            "kappa_zero": self.kappa_zero,
            "cluster_radius": self.radius,
        }


def _circ_dist(x, y, omega):
    d = abs(x - y) % omega
    return min(d, omega - d)


def reduce_mod(times, omega):
    """Residues in ``[0, omega)``; ``fmod`` is exact for float inputs."""
    r = np.fmod(np.asarray(times, dtype=float), omega)
    r = np.where(r < 0, r + omega, r)
    return np.where(r >= omega, 0.0, r)


def shift_spectrum(seq, omega, cluster_radius=None):
    """Cluster the residues ``t_k mod omega`` on the circle.

    Clusters are single-linkage at ``cluster_radius`` (default ``omega/100``)
    with wraparound, so residues just below ``omega`` join those near zero.
    ``kappa`` is the smallest cluster center, with a cluster that touches
    zero reported as exactly zero.
    """
    omega = float(omega)
    if not omega > 0:
        raise ValueError("omega must be positive")
    radius = omega / 100 if cluster_radius is None else float(cluster_radius)
    times = _times(seq)
    if len(times) == 0:
        raise ValueError("empty sequence")
    res = reduce_mod(times, omega)

    order = np.argsort(res, kind="stable")
    sr = res[order]
    groups = [[order[0]]]
    for prev, cur, idx in zip(sr[:-1], sr[1:], order[1:]):
        if cur - prev <= radius:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    unwrapped = {i: res[i] for i in range(len(res))}
    if len(groups) > 1 and (omega - sr[-1]) + sr[0] <= radius:
        last = groups.pop()
        for i in last:
            unwrapped[i] = res[i] - omega
        groups[0] = last + groups[0]

    clusters = []
    for g in groups:
        center = float(np.mean([unwrapped[i] for i in g]))
        if _circ_dist(center, 0.0, omega) < radius:
            center = 0.0
        else:
            center = center % omega
        clusters.append(Cluster(center=center, members=np.array(sorted(g))))
    clusters.sort(key=lambda c: c.center)
    kappa = clusters[0].center
    kappa_zero = kappa < radius or kappa > omega - radius
    return ShiftSpectrum(
        omega=omega, residues=res, clusters=clusters, kappa=kappa,
        kappa_zero=bool(kappa_zero), radius=radius,
    )


def _sub(seq, members):
    if hasattr(seq, "subsequence"):
        mask = np.zeros(len(seq), dtype=bool)
        mask[members] = True
        return seq.subsequence(mask)
    return _times(seq)[members]


def check_mpps_sum(phi, psi, seq, omega, interval, eps, mode="auto",
                   cluster_radius=None, grid=1000, tail=None):
    """Recurrence of ``phi + psi`` along the sequence.

    ``mode="definition"`` checks ``(phi+psi)(t + t_k) -> (phi+psi)(t)`` along
    the entries whose residues cluster at zero.  ``mode="shifted"`` checks
    ``(phi+psi)(t + t_k) -> phi(t + tau) + psi(t)`` along the dominant cluster
    with center ``tau``.  ``"auto"`` picks the former when the Poisson number
    is zero.
    """
    spec = shift_spectrum(seq, omega, cluster_radius)
    if mode == "auto":
        mode = "definition" if spec.kappa_zero else "shifted"
    t = _grid(interval, grid)

    if mode == "definition":
        zc = spec.zero_cluster()
        members = zc.members if zc is not None else np.arange(len(_times(seq)))
        tau = 0.0
    elif mode == "shifted":
        dom = spec.dominant()
        members, tau = dom.members, dom.center
    else:
        raise ValueError(f"unknown mode {mode!r}")

    target = np.asarray(phi(t + tau)) + np.asarray(psi(t))
    shifts = _times(seq)[members]
    sups = np.array([
        np.max(_norm(np.asarray(phi(t + tk)) + np.asarray(psi(t + tk)) - target))
        for tk in shifts
    ])
    return _verdict(interval, shifts, sups, eps, tail, mode=mode,
                    target_shift=float(tau), omega=float(omega),
                    extra={"kappa": spec.kappa, "kappa_zero": spec.kappa_zero})


# -- periodic approximation ---------------------------------------------------

@dataclass
class PeriodicComponent:
    """Periodic function given by samples on a uniform phase grid."""

    omega: float
    values: np.ndarray  # (phase_grid,) or (phase_grid, n)
    t0: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m = len(self.values)
        x = reduce_mod(t - self.t0, self.omega) * (m / self.omega)
        i = np.floor(x).astype(np.int64) % m
        w = x - np.floor(x)
        j = (i + 1) % m
        if self.values.ndim == 1:
            return (1 - w) * self.values[i] + w * self.values[j]
        return (1 - w)[..., None] * self.values[i] + w[..., None] * self.values[j]


def phase_samples(f, omega, t_range, phase_grid):
    """Array ``(phase_grid, periods, ...)`` of ``f(t0 + phase + m * omega)``."""
    t0, t1 = t_range
    periods = int(math.floor((t1 - t0) / omega + 1e-12))
    if periods < MIN_PERIODS:
        raise InsufficientRange(
            f"range covers {periods} periods; at least {MIN_PERIODS} needed"
        )
    phases = np.arange(phase_grid) * (omega / phase_grid)
    m = np.arange(periods)
    t = t0 + phases[:, None] + omega * m[None, :]
    t = np.minimum(t, t1)
    vals = np.asarray(f(t.ravel()))
    return vals.reshape(t.shape + vals.shape[1:])


def extract_periodic_component(f, omega, t_range, phase_grid=200):
    """Best sup-norm periodic approximation on the sampled phase sets.

    For every phase the midrange of ``{f(phase + m omega)}`` minimizes the
    largest deviation over ``m``; the returned residual is that minimum
    maximized over phases (and components).
    """
    samples = phase_samples(f, omega, t_range, phase_grid)
    hi = samples.max(axis=1)
    lo = samples.min(axis=1)
    g = PeriodicComponent(omega=float(omega), values=(hi + lo) / 2, t0=float(t_range[0]))
    residual = float(np.max((hi - lo) / 2))
    return g, residual


# -- compositions -------------------------------------------------------------

_LEMMAS = {
    ("poisson", "periodic"): "poisson_in_t_periodic_argument",
    ("periodic", "poisson"): "periodic_in_t_poisson_argument",
    ("poisson", "poisson"): "common_sequence",
}


def check_composition(G, upsilon, seq, omega, interval, eps, g_kind, upsilon_kind,
                      lipschitz, grid=1000, tail=None, cluster_radius=None):
    """Recurrence of ``t -> G(t, upsilon(t))`` along ``seq``.

    ``g_kind`` and ``upsilon_kind`` declare how each ingredient recurs
    ("periodic" or "poisson").  When one of them is periodic the entries of
    the zero-residue cluster are used.  Each row of the report also records
    the split ``dev_t + L * dev_arg`` that bounds the measured deviation.
    """
    key = (g_kind, upsilon_kind)
    if key not in _LEMMAS:
        raise ConfigurationError(
            f"no composition rule for G {g_kind!r} in t with {upsilon_kind!r} argument"
        )
    shifts = _times(seq)
    if "periodic" in key:
        spec = shift_spectrum(seq, omega, cluster_radius)
        zc = spec.zero_cluster()
        if zc is None:
            raise ConditionFailed("Poisson number is not zero for this period")
        shifts = shifts[zc.members]

    t = _grid(interval, grid)
    u0 = np.asarray(upsilon(t))
    h0 = np.asarray(G(t, u0))
    sups, dev_t, dev_u = [], [], []
    for tk in shifts:
        uk = np.asarray(upsilon(t + tk))
        hk = np.asarray(G(t + tk, uk))
        sups.append(np.max(_norm(hk - h0)))
        dev_t.append(np.max(_norm(hk - np.asarray(G(t, uk)))))
        dev_u.append(np.max(_norm(uk - u0)))
    sups, dev_t, dev_u = map(np.array, (sups, dev_t, dev_u))
    bound = dev_t + lipschitz * dev_u
    extra = {
        "rule": _LEMMAS[key],
        "lipschitz": float(lipschitz),
        "dev_t": dev_t.tolist(),
        "dev_argument": dev_u.tolist(),
        "lipschitz_bound": bound.tolist(),
        "bound_holds": bool(np.all(sups <= bound * (1 + 1e-12) + 1e-15)),
    }
    return _verdict(interval, shifts, sups, eps, tail, mode=_LEMMAS[key],
                    omega=float(omega), extra=extra)
