"""End-to-end run of one configured system: multipliers, conditions,
bounded solution, recurrence checks and artifacts on disk."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import svg
from ._integrate import ATOL, RTOL
from .analysis import shift_spectrum, verify_poisson
from .errors import ConditionFailed, MppsError
from .floquet import check_dichotomy, estimate_dichotomy, multipliers
from .recurrence import detect_poisson_sequence, verify_theta_poisson
from .serialize import write_json
from .solutions import (bounded_solution_linear, check_conditions, default_dt, picard_solve,
                        simulate_forward, solve_mpps_coefficients, verify_gronwall_decay)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONDITION = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5

DEFAULT_WINDOW = 3
DEFAULT_DELTAS = (0.05, 0.02, 0.01, 0.008, 0.006, 0.005)


@dataclass
class RunOptions:
    """Command-line overrides; ``None`` keeps the configuration's value."""

    tol: float | None = None
    burn_in: float | None = None
    grid: int | None = None
    eps: float | None = None
    force: bool = False
    plots: bool = True


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    artifacts: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def config_sequence(cfg):
    """Near-return sequence of the configured orbit, in time units."""
    if cfg.orbit is None:
        return None
    p = cfg.poisson
    offset = int(p.get("offset", cfg.logistic.get("lead_intervals", 0)))
    seq = detect_poisson_sequence(cfg.orbit, int(p.get("window", DEFAULT_WINDOW)),
                                  p.get("deltas", DEFAULT_DELTAS), offset)
    return seq.scaled(cfg.logistic["q"])


def _check_interval(cfg):
    if "interval" in cfg.poisson:
        return tuple(cfg.poisson["interval"])
    q = cfg.logistic["q"]
    return (q, q + 2 * cfg.omega)


def run(cfg, out_dir, options=None):
    """Run the full pipeline for ``cfg`` and write every artifact to ``out_dir``.

    The exit code follows the command-line convention: 3 when a gating
    condition fails (and ``force`` is off), 4 on solver failure, 5 when a
    recurrence verification fails.
    """
    opts = options or RunOptions()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = RunResult(EXIT_OK, out)
    sys_ = cfg.system
    rtol = opts.tol or cfg.solver.get("rtol", RTOL)
    atol = min(cfg.solver.get("atol", ATOL), rtol * 1e-2)
    horizon = float(cfg.solver.get("horizon", 20 * cfg.omega))
    burn_in = opts.burn_in or cfg.solver.get("burn_in")
    dgrid = int(cfg.solver.get("dichotomy_grid", 61))
    dt = default_dt(sys_, cfg.omega)
    if opts.grid:
        dt = min(dt, cfg.omega / opts.grid)

    def emit(path, writer):
        writer(out / path)
        res.artifacts.append(path)

    # multipliers and decay pair
    fd = multipliers(sys_.A, rtol, atol)
    certified = None
    if fd.c4_satisfied:
        certified = estimate_dichotomy(sys_.A, rtol, dgrid, fd=fd, atol=atol)
        fd_cert = fd.with_constants(*certified, source="certified")
    else:
        fd_cert = fd
        res.warnings.append("a multiplier has modulus >= 1: no decay pair can be certified")
    fd_used = fd_cert
    extra = {}
    if cfg.declared is not None:
        fd_used = fd.with_constants(*cfg.declared, source="declared")
        ok, worst = check_dichotomy(sys_.A, *cfg.declared, grid=dgrid, tol=rtol, atol=atol)
        extra["declared_pair_certificate"] = {"K": cfg.declared[0], "alpha": cfg.declared[1],
                                              "passed": ok, "worst_ratio": worst}
        if not ok:
            res.warnings.append(
                f"declared pair (K={cfg.declared[0]:g}, alpha={cfg.declared[1]:.6g}) violates "
                f"the decay bound on the sampling grid (worst ratio {worst:.4g})")
    floquet_doc = {**fd_used.to_dict(), "certified": {"K": certified and certified[0],
                                                      "alpha": certified and certified[1]},
                   **extra}
    emit("floquet.json", lambda p: write_json(p, floquet_doc))

    # recurrence
    seq = config_sequence(cfg)
    poisson_doc = {}
    if seq is not None:
        emit("sequence.csv", seq.to_csv)
        interval = _check_interval(cfg)
        eps = opts.eps or cfg.poisson.get("eps") or 2.0 * float(seq.precisions[-1])
        spec = shift_spectrum(seq, cfg.omega)
        theta_rep = verify_theta_poisson(cfg.theta, seq, interval, eps)
        poisson_doc = {"sequence": {"times": seq.times, "shifts": seq.shifts,
                                    "precisions": seq.precisions, "errors": seq.errors,
                                    "window": seq.window, "offset": seq.offset},
                       "shift_spectrum": spec.to_dict(),
                       "theta": theta_rep.to_dict()}
        if sys_.forcing.psi is not None:
            psi_rep = verify_poisson(sys_.forcing.psi_at, seq, interval, eps * _psi_gain(sys_),
                                     grid=2001)
            poisson_doc["psi"] = psi_rep.to_dict()
        emit("poisson.json", lambda p: write_json(p, poisson_doc))
        if opts.plots:
            t = np.linspace(0.0, horizon, 4001)
            emit("theta.svg", lambda p: p.write_text(svg.line_plot(
                [svg.Series(t, cfg.theta(t), "theta")], f"{cfg.name}: relaxation signal",
                "t", "theta(t)")))

    # conditions
    report = check_conditions(sys_, fd_used, sequence=seq)
    report.warnings.extend(res.warnings)
    if certified is not None and cfg.declared is not None:
        report.constants["certified_report"] = check_conditions(
            sys_, fd_cert, sequence=seq).to_dict()["conditions"]
    failed = report.failed()
    gate_failed = bool(failed)
    if gate_failed:
        msg = f"conditions not satisfied: {', '.join(failed)}"
        if opts.force:
            report.warnings.append("FORCED RUN: " + msg + "; results carry no guarantee")
        res.warnings.append(msg)
    emit("conditions.json", report.to_json)
    res.summary["conditions_failed"] = failed
    if gate_failed and not opts.force:
        res.exit_code = EXIT_CONDITION
        _write_summary(res, cfg)
        return res

    # solutions
    x0 = cfg.initial_state if cfg.initial_state is not None else np.zeros(sys_.dim)
    try:
        traj = simulate_forward(sys_, x0, (0.0, horizon), rtol, dt, atol)
        emit("trajectory.csv", traj.to_csv)
        if opts.plots:
            emit("coordinates.svg", lambda p: p.write_text(
                svg.coordinates_svg(traj, f"{cfg.name}: coordinates")))
            emit("phase.svg", lambda p: p.write_text(
                svg.phase_svg(traj, f"{cfg.name}: trajectory")))
        if fd.c4_satisfied:
            sol = _bounded(sys_, fd_cert, (0.0, horizon), rtol, atol, dt, burn_in)
            emit("solution.csv", sol.to_csv)
            alpha = fd_cert.alpha
            settle = min(10.0 / alpha, 0.5 * horizon)
            late = traj.times >= settle
            gap = float(np.max(np.abs(traj.samples[late] - sol.samples[late])))
            res.summary.update({
                "solution_sup_norm": sol.sup_norm(),
                "trajectory_vs_solution": {"from": settle, "sup_difference": gap},
                "solver": {k: v for k, v in sol.metadata.items() if k != "x0"},
            })
        if sys_.g is not None:
            z0 = x0 + 0.2 * np.sign(np.arange(sys_.dim) % 2 - 0.5)
            stab = {}
            for label, f in (("declared", fd_used), ("certified", fd_cert)):
                if f.K is not None and (label == "certified" or cfg.declared is not None):
                    stab[label] = verify_gronwall_decay(sys_, f, x0, z0, (0.0, 10.0), rtol,
                                                        dt, atol=atol).to_dict()
            emit("stability.json", lambda p: write_json(p, {"x0": x0, "z0": z0, **stab}))
    except ConditionFailed as exc:
        res.warnings.append(str(exc))
        res.exit_code = EXIT_CONDITION
        _write_summary(res, cfg)
        return res
    except MppsError as exc:
        res.warnings.append(f"solver failure: {exc}")
        res.exit_code = EXIT_SOLVER
        _write_summary(res, cfg)
        return res

    if poisson_doc and not poisson_doc["theta"]["passed"]:
        res.exit_code = EXIT_VERIFY
        res.warnings.append("recurrence verification of the relaxation signal failed")
    _write_summary(res, cfg)
    return res


def _psi_gain(sys_):
    """Factor converting a relaxation-signal tolerance to one for ``psi``."""
    gain = getattr(sys_.forcing.psi, "theta_lipschitz", None)
    return max(1.0, gain()) if gain else 1.0


def _bounded(sys_, fd, window, rtol, atol, dt, burn_in):
    if sys_.D is not None:
        return solve_mpps_coefficients(sys_, fd, window, tol=rtol, burn_in=burn_in, dt=dt,
                                       atol=atol)
    if sys_.g is not None:
        return picard_solve(sys_, fd, window, tol=rtol, burn_in=burn_in, dt=dt, atol=atol)
    x, _, _ = bounded_solution_linear(sys_.A, sys_.forcing, window, rtol, dt, burn_in, fd,
                                      atol)
    return x


def _write_summary(res, cfg):
    doc = {"name": cfg.name, "exit_code": res.exit_code, "artifacts": list(res.artifacts),
           "warnings": list(res.warnings), **res.summary}
    write_json(res.out_dir / "summary.json", doc)
    res.artifacts.append("summary.json")
    for w in res.warnings:
        log.info(w)
    return doc

