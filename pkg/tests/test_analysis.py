import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mpps.analysis import (ConvergenceReport, check_composition, check_mpps_sum,
                           extract_periodic_component, phase_samples, reduce_mod,
                           shift_spectrum, verify_poisson)
from mpps.errors import ConditionFailed, ConfigurationError, CoverageError, InsufficientRange
from mpps.recurrence import (build_step_signal, build_theta, detect_poisson_sequence,
                             iterate_logistic)
from mpps.solutions import Trajectory

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def ex1_theta():
    """Relaxation signal of the first example, with its returns in time units."""
    orbit = iterate_logistic(3.85, 0.4, 4000)
    q = 6 * math.pi
    theta = build_theta(build_step_signal(orbit, q, origin=-1000 * q), 3.0)
    seq = detect_poisson_sequence(orbit, 3, [0.05, 0.02, 0.01, 0.008, 0.006, 0.005],
                                  offset=1000).scaled(q)
    return theta, seq, q


@pytest.fixture(scope="module")
def ex2_theta():
    orbit = iterate_logistic(3.9, 0.4, 20_000)
    theta = build_theta(build_step_signal(orbit, 6.0, origin=-6000.0), 2.0)
    seq = detect_poisson_sequence(orbit, 3, [0.05, 0.02, 0.01, 0.008, 0.006, 0.005],
                                  offset=1000).scaled(6.0)
    return theta, seq


# -- Definition 1 checks ------------------------------------------------------

def test_periodic_function_recurs_along_its_periods():
    rep = verify_poisson(np.cos, TWO_PI * np.arange(1, 7), (0.0, 10.0), 1e-9)
    assert rep.passed
    assert rep.sups.max() < 1e-12


def test_drift_is_not_recurrent():
    rep = verify_poisson(lambda t: t, [1.0, 2.0, 5.0], (0.0, 1.0), 0.5)
    assert not rep.passed
    assert np.allclose(rep.sups, [1.0, 2.0, 5.0])


def test_relaxation_signal_recurs(ex1_theta):
    theta, seq, q = ex1_theta
    rep = verify_poisson(theta, seq, (q, q + 4 * math.pi), 2 * seq.precisions[-1],
                         grid=4001)
    assert rep.passed
    # deviation never exceeds precision / k
    assert np.all(rep.sups <= seq.precisions / 3.0 + 1e-12)


def test_vector_valued_functions_use_max_norm():
    f = lambda t: np.stack([np.cos(t), 2 * np.sin(t)], axis=-1)  # noqa: E731
    rep = verify_poisson(f, [math.pi], (0.0, 1.0), 10.0, grid=np.array([math.pi / 2]))
    assert rep.sups[0] == pytest.approx(4.0)


def test_coverage_error_propagates():
    traj = Trajectory(0.0, 0.1, np.zeros((101, 2)))
    with pytest.raises(CoverageError):
        verify_poisson(traj, [5.0, 50.0], (0.0, 6.0), 0.1)


def test_verdict_uses_tail_only():
    rep = verify_poisson(lambda t: np.zeros_like(t) + (t > 100), [200.0, 1.0, 2.0],
                         (0.0, 1.0), 0.5)
    assert rep.tail_index == 1 and rep.passed
    rep = verify_poisson(lambda t: np.zeros_like(t) + (t > 100), [200.0, 1.0, 2.0],
                         (0.0, 1.0), 0.5, tail=0)
    assert not rep.passed


def test_report_serialization(tmp_path):
    rep = verify_poisson(np.cos, TWO_PI * np.arange(1, 4), (0.0, 1.0), 0.1, omega=TWO_PI)
    rep.to_json(tmp_path / "r.json")
    rep.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().startswith("k,t_k,residue,sup_deviation\n")
    lines = rep.summary_lines()
    assert len(lines) == 4 and lines[-1].startswith("verdict: PASS")
    assert isinstance(rep, ConvergenceReport)


# -- shift spectrum -----------------------------------------------------------

def test_spectrum_of_multiples_of_six_pi():
    spec = shift_spectrum([6 * math.pi, 12 * math.pi, 18 * math.pi], TWO_PI)
    assert len(spec.clusters) == 1
    assert spec.kappa == 0.0 and spec.kappa_zero


def test_spectrum_of_constructed_residue():
    omega = 1.7
    spec = shift_spectrum([k * omega + 0.3 for k in range(1, 9)], omega)
    assert spec.kappa == pytest.approx(0.3, abs=1e-12)
    assert not spec.kappa_zero


def test_spectrum_of_three_pi_multiples():
    spec = shift_spectrum(3 * math.pi * np.arange(1, 12), math.pi)
    assert spec.kappa == 0.0 and spec.kappa_zero


def test_residues_just_below_period_join_zero_cluster():
    omega = 3.0
    spec = shift_spectrum([3.0 * 5 - 1e-4, 3.0 * 7 + 1e-4, 3.0 * 11 - 2e-4], omega)
    assert len(spec.clusters) == 1
    assert spec.kappa_zero and spec.zero_cluster().count == 3


def test_kappa_is_smallest_cluster():
    spec = shift_spectrum([10.5, 20.5, 10.2, 20.2, 30.2], 10.0)
    assert spec.kappa == pytest.approx(0.2)
    assert spec.dominant().center == pytest.approx(0.2)
    assert len(spec.to_dict()["clusters"]) == 2


@given(k=st.integers(0, 10**9), r=st.floats(0.0, 0.999), omega=st.floats(0.1, 10.0))
def test_residue_arithmetic(k, r, omega):
    t = k * omega + r * omega
    res = reduce_mod([t], omega)[0]
    assert 0.0 <= res < omega
    # exact reduction of the float actually stored
    assert abs(res - math.fmod(t, omega)) <= 1e-12 * max(1.0, omega)


def test_reduction_is_exact_for_huge_times():
    omega = 2 * math.pi
    t = 1e15 * omega + 1.0
    assert reduce_mod([t], omega)[0] == math.fmod(t, omega)


# -- sums of periodic and recurrent parts -------------------------------------

def test_cosine_sum_recurs():
    rep = check_mpps_sum(np.cos, lambda t: np.zeros_like(t), TWO_PI * np.arange(1, 6),
                         TWO_PI, (0.0, 10.0), 1e-9)
    assert rep.passed and rep.mode == "definition"


def test_example1_forcing_recurs(ex1):
    forcing = ex1.system.forcing
    from mpps.pipeline import config_sequence
    seq = config_sequence(ex1)
    q = ex1.logistic["q"]
    eps = 2 * seq.precisions[-1] * forcing.psi.theta_lipschitz()
    rep = check_mpps_sum(forcing.phi_at, forcing.psi_at, seq, ex1.omega,
                         (q, q + 2 * ex1.omega), eps)
    assert rep.passed and rep.extra["kappa_zero"]


def test_shifted_cluster_passes_remark_form_only():
    omega = 2.0
    phi = lambda t: np.cos(2 * math.pi * t / omega)  # noqa: E731
    psi = lambda t: np.zeros_like(t)  # noqa: E731
    seq = [omega * k + omega / 2 for k in range(1, 8)]
    definition = check_mpps_sum(phi, psi, seq, omega, (0.0, 4.0), 1e-6, mode="definition")
    shifted = check_mpps_sum(phi, psi, seq, omega, (0.0, 4.0), 1e-6)
    assert not definition.passed
    assert shifted.mode == "shifted" and shifted.passed
    assert shifted.target_shift == pytest.approx(1.0)


def test_unknown_mode():
    with pytest.raises(ValueError):
        check_mpps_sum(np.cos, np.cos, [TWO_PI], TWO_PI, (0, 1), 0.1, mode="other")


# -- periodic extraction ------------------------------------------------------

def test_periodic_function_extracts_exactly():
    g, residual = extract_periodic_component(lambda t: np.sin(t) + 0.3 * np.cos(3 * t), TWO_PI,
                                             (0.0, 30 * TWO_PI), phase_grid=400)
    assert residual < 1e-12
    t = np.linspace(0, 20, 777)
    # linear interpolation on 400 phases
    assert np.max(np.abs(g(t) - (np.sin(t) + 0.3 * np.cos(3 * t)))) < 2e-3


def test_cosine_plus_theta(ex1_theta):
    theta, _, _ = ex1_theta
    t0 = theta.settled
    f = lambda t: np.cos(t) + theta(t)  # noqa: E731
    g, residual = extract_periodic_component(f, TWO_PI, (t0, t0 + 60 * TWO_PI))
    samples = theta(np.linspace(t0, t0 + 60 * TWO_PI, 20001))
    spread = samples.max() - samples.min()
    assert residual <= spread / 2 + 1e-9
    tt = np.linspace(t0, t0 + TWO_PI, 200, endpoint=False)
    dev = g(tt) - np.cos(tt)
    # recovered component is cos t plus a phase-dependent level within theta's range
    assert np.all(dev >= samples.min() - 1e-3) and np.all(dev <= samples.max() + 1e-3)


def test_theta_alone_residual_by_brute_force(ex2_theta):
    theta, _ = ex2_theta
    rng = (theta.settled, theta.settled + 25 * 3.0)
    g, residual = extract_periodic_component(theta, 3.0, rng, phase_grid=50)
    samples = phase_samples(theta, 3.0, rng, 50)
    brute = max((s.max() - s.min()) / 2 for s in samples)
    assert residual == pytest.approx(brute, abs=1e-15)
    phases = rng[0] + np.arange(50) * (3.0 / 50)
    assert np.allclose(g(phases), (samples.max(axis=1) + samples.min(axis=1)) / 2)


@given(data=st.lists(st.floats(-5, 5), min_size=20, max_size=40),
       c=st.floats(-5, 5))
def test_midrange_is_optimal(data, c):
    values = np.array(data)
    f = lambda t: np.interp(t, np.arange(len(values)), values)  # noqa: E731
    g, residual = extract_periodic_component(f, 1.0, (0.0, float(len(values))),
                                             phase_grid=1)
    assert residual == pytest.approx((values.max() - values.min()) / 2)
    # no other constant does better
    assert np.max(np.abs(values - c)) >= residual - 1e-12


def test_extraction_needs_twenty_periods():
    with pytest.raises(InsufficientRange):
        extract_periodic_component(np.sin, TWO_PI, (0.0, 19.5 * TWO_PI))


# -- compositions -------------------------------------------------------------

def test_identity_composition_reduces_to_definition(ex1_theta):
    theta, seq, q = ex1_theta
    interval = (q, q + 4 * math.pi)
    comp = check_composition(lambda t, x: x, theta, seq, TWO_PI, interval, 0.01,
                             "poisson", "poisson", 1.0)
    plain = verify_poisson(theta, seq, interval, 0.01)
    assert np.allclose(comp.sups, plain.sups)
    assert comp.passed == plain.passed


def test_periodic_in_time_with_recurrent_argument(ex1_theta):
    theta, seq, q = ex1_theta
    G = lambda t, x: np.sin(t) * np.arctan(x)  # noqa: E731
    rep = check_composition(G, theta, seq, TWO_PI, (q, q + 4 * math.pi),
                            2 * seq.precisions[-1], "periodic", "poisson", 1.0)
    assert rep.passed
    assert rep.extra["bound_holds"]
    assert rep.extra["rule"] == "periodic_in_t_poisson_argument"


def test_sum_and_product_of_recurrent_signals(ex2_theta):
    theta, seq = ex2_theta
    other = lambda t: 0.5 * theta(t) ** 2  # noqa: E731
    eps = 2 * seq.precisions[-1]
    add = check_composition(lambda t, x: x + other(t), theta, seq, 3.0, (6.0, 12.0), 2 * eps,
                            "poisson", "poisson", 1.0)
    mul = check_composition(lambda t, x: x * other(t), theta, seq, 3.0, (6.0, 12.0), eps,
                            "poisson", "poisson", 0.5)
    assert add.passed and mul.passed
    assert add.extra["bound_holds"] and mul.extra["bound_holds"]


def test_unsupported_composition_kinds():
    with pytest.raises(ConfigurationError):
        check_composition(lambda t, x: x, np.cos, [1.0], 1.0, (0, 1), 0.1,
                          "periodic", "periodic", 1.0)


def test_periodic_rule_needs_zero_poisson_number():
    with pytest.raises(ConditionFailed):
        check_composition(lambda t, x: x, np.cos, [1.5, 2.5, 3.5], 1.0, (0, 1), 0.1,
                          "poisson", "periodic", 1.0)
