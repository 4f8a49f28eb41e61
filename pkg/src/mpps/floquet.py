"""Transition matrices, multipliers and exponential decay certificates for
periodic linear systems ``x' = A(t) x``.

Matrix norms are row-sum norms, ``||A|| = max_i sum_j |a_ij|``, the norm
induced by the vector max-norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from ._integrate import ATOL, METHOD, RTOL
from .errors import ConditionFailed, StepFailure
from .serialize import write_json

ALPHA_MARGIN = 0.01


def matrix_norm(m):
    """Row-sum norm; broadcasts over leading axes."""
    return np.max(np.sum(np.abs(m), axis=-1), axis=-1)


@dataclass(frozen=True)
class PeriodicMatrixFn:
    """``omega``-periodic matrix function ``t -> A(t)`` of size ``dim``."""

    func: Callable[[float], np.ndarray]
    omega: float
    dim: int
    diagonal: bool = False
    name: str = ""

    def __call__(self, t):
        return np.asarray(self.func(t), dtype=float)

    def period_defect(self, samples=64, seed=0):
        """Largest ``||A(t + omega) - A(t)||`` over random sample times."""
        rng = np.random.default_rng(seed)
        ts = rng.uniform(-10 * self.omega, 10 * self.omega, samples)
        return max(float(matrix_norm(self(t + self.omega) - self(t))) for t in ts)

    def shift_norm(self, tau, samples=4000):
        """Sampled ``max_t ||A(t + tau) - A(t)||`` over two declared periods
        (still the full range when the true period is twice the declared one)."""
        ts = np.linspace(0.0, 2.0 * self.omega, samples, endpoint=False)
        return max(float(matrix_norm(self(t + tau) - self(t))) for t in ts)


def constant_matrix(m, omega=1.0, name=""):
    m = np.array(m, dtype=float)
    diag = bool(np.all(m == np.diag(np.diag(m))))
    return PeriodicMatrixFn(lambda t: m, float(omega), m.shape[0], diag, name)


def _matrix_rhs(A):
    n = A.dim

    def rhs(t, y):
        return (A(t) @ y.reshape(n, n)).ravel()

    return rhs


def transition_matrices(A, s, ts, tol=RTOL, atol=ATOL):
    """``X(t, s)`` for every ``t`` in ``ts`` (all on one side of ``s``)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    n = A.dim
    out = np.empty((len(ts), n, n))
    eye = np.eye(n)
    same = ts == s
    out[same] = eye
    idx = np.nonzero(~same)[0]
    if len(idx) == 0:
        return out
    forward = ts[idx] > s
    if np.any(forward) and not np.all(forward):
        raise ValueError("all times must lie on one side of s")
    order = idx[np.argsort(ts[idx] if forward[0] else -ts[idx], kind="stable")]
    sol = solve_ivp(_matrix_rhs(A), (s, ts[order[-1]]), eye.ravel(), method=METHOD,
                    t_eval=ts[order], rtol=tol, atol=atol)
    if not sol.success:
        raise StepFailure(f"transition matrix integration failed: {sol.message}")
    out[order] = sol.y.T.reshape(-1, n, n)
    return out


def transition_matrix(A, t, s, tol=RTOL, atol=ATOL):
    """Transition matrix ``X(t, s)`` of ``x' = A(t) x`` (``X(s, s) = I``).

    Solved column-wise as the matrix ODE ``X' = A(t) X`` by an adaptive
    Dormand-Prince 8(5,3) pair.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return transition_matrices(A, s, [t], tol, atol)[0]


@dataclass(frozen=True)
class FloquetData:
    omega: float
    monodromy: np.ndarray
    multipliers: np.ndarray
    K: float | None = None
    alpha: float | None = None
    tol: float = RTOL
    source: str = "certified"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def c4_satisfied(self):
        return bool(np.all(np.abs(self.multipliers) < 1.0))

    @property
    def decay_rate(self):
        """``-ln(max |rho|) / omega``: the exponential rate set by the multipliers."""
        return -math.log(float(np.max(np.abs(self.multipliers)))) / self.omega

    def with_constants(self, K, alpha, source="declared"):
        return replace(self, K=float(K), alpha=float(alpha), source=source)

    def to_dict(self):
        return {
            "omega": self.omega,
            "monodromy": np.asarray(self.monodromy).tolist(),
            "multipliers": [{"re": float(z.real), "im": float(z.imag)}
                            for z in np.asarray(self.multipliers, dtype=complex)],
            "K": self.K,
            "alpha": self.alpha,
            "tol": self.tol,
            "source": self.source,
            "c4_satisfied": self.c4_satisfied,
            **self.extra,
        }

    def to_json(self, path):
        return write_json(path, self.to_dict())

    @classmethod
    def from_dict(cls, d):
        mult = np.array([complex(m["re"], m["im"]) for m in d["multipliers"]])
        return cls(
            omega=float(d["omega"]),
            monodromy=np.array(d["monodromy"], dtype=float),
            multipliers=mult,
            K=d.get("K"),
            alpha=d.get("alpha"),
            tol=float(d.get("tol", RTOL)),
            source=d.get("source", "certified"),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def multipliers(A, tol=RTOL, atol=ATOL):
    """Monodromy matrix ``X(omega, 0)`` and its eigenvalues."""
    mono = transition_matrix(A, A.omega, 0.0, tol, atol)
    rho = np.linalg.eigvals(mono)
    rho = rho[np.argsort(-np.abs(rho), kind="stable")]
    return FloquetData(omega=A.omega, monodromy=mono, multipliers=rho, tol=tol)


def _grid_norms(A, grid, tol, atol):
    """``(t - s, ||X(t, s)||)`` over the grid ``[0, 3 omega]^2`` with ``t >= s``."""
    pts = np.linspace(0.0, 3.0 * A.omega, grid)
    lags, norms = [], []
    for j, s in enumerate(pts):
        xs = transition_matrices(A, s, pts[j:], tol, atol)
        lags.append(pts[j:] - s)
        norms.append(matrix_norm(xs))
    return np.concatenate(lags), np.concatenate(norms)


def estimate_dichotomy(A, tol=RTOL, grid=61, fd=None, margin=ALPHA_MARGIN, atol=ATOL):
    """Sampled certificate ``(K, alpha)`` with ``||X(t,s)|| <= K exp(-alpha (t-s))``.

    ``alpha`` is the multiplier rate shrunk by ``margin``; ``K`` is the
    smallest value (rounded up to 1e-6, at least 1) making the inequality
    hold on the grid.  The certificate is sampled, not proved.
    """
    fd = fd or multipliers(A, tol, atol)
    if not fd.c4_satisfied:
        bad = float(np.max(np.abs(fd.multipliers)))
        raise ConditionFailed(f"multiplier of modulus {bad:.6g} >= 1")
    alpha = fd.decay_rate * (1.0 - margin)
    lags, norms = _grid_norms(A, grid, tol, atol)
    k_raw = float(np.max(norms * np.exp(alpha * lags)))
    K = max(1.0, math.ceil(round(k_raw, 10) * 1e6) / 1e6)
    return K, alpha


def floquet_data(A, tol=RTOL, grid=61, atol=ATOL):
    """Multipliers together with a certified decay pair."""
    fd = multipliers(A, tol, atol)
    K, alpha = estimate_dichotomy(A, tol, grid, fd=fd, atol=atol)
    return fd.with_constants(K, alpha, source="certified")


def check_dichotomy(A, K, alpha, grid=61, tol=RTOL, atol=ATOL):
    """Worst ratio ``||X(t,s)|| e^{alpha (t-s)} / K`` on the grid; <= 1 passes."""
    lags, norms = _grid_norms(A, grid, tol, atol)
    worst = float(np.max(norms * np.exp(alpha * lags) / K))
    return worst <= 1.0 + 1e-9, worst


@dataclass
class ShiftBoundReport:
    tau: float
    shift_norm: float
    pairs: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: float

    @property
    def margin(self):
        return self.rhs + self.slack - self.lhs

    @property
    def violations(self):
        return int(np.sum(self.margin < 0))

    @property
    def passed(self):
        return self.violations == 0

    def to_dict(self):
        return {
            "tau": self.tau,
            "shift_norm": self.shift_norm,
            "slack": self.slack,
            "violations": self.violations,
            "passed": self.passed,
            "rows": [
                {"t": float(t), "s": float(s), "lhs": float(l), "rhs": float(r)}
                for (t, s), l, r in zip(self.pairs, self.lhs, self.rhs)
            ],
        }


def check_lemma1_bound(A, tau, pairs, K, alpha, tol=RTOL, slack=None, atol=ATOL):
    """Compare ``||X(t+tau, s+tau) - X(t, s)||`` with the perturbation bound

        max_t ||A(t+tau) - A(t)|| * 2 K^2 / (alpha^2 e) * exp(-alpha (t-s) / 2).

    ``slack`` (default ``100 * tol``) absorbs integration error where the
    bound is zero (``tau`` a multiple of the period).
    """
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if np.any(pairs[:, 0] < pairs[:, 1]):
        raise ValueError("every pair needs t >= s")
    shift = A.shift_norm(tau)
    coef = shift * 2.0 * K**2 / (alpha**2 * math.e)
    lhs = np.array([
        matrix_norm(transition_matrix(A, t + tau, s + tau, tol, atol)
                    - transition_matrix(A, t, s, tol, atol))
        for t, s in pairs
    ])
    rhs = coef * np.exp(-0.5 * alpha * (pairs[:, 0] - pairs[:, 1]))
    return ShiftBoundReport(
        tau=float(tau), shift_norm=shift, pairs=pairs, lhs=lhs, rhs=rhs,
        slack=100.0 * tol if slack is None else float(slack),
    )
