"""Recurrence of a relaxation signal driven by the logistic map.

A chaotic logistic orbit is held constant on intervals of length q, and the
resulting step signal drives theta' = -k theta + step(t).  Near-returns of the
orbit become time shifts along which theta comes back close to itself.

    python3 demos/recurrence_of_theta.py
"""

import math

import numpy as np

from mpps import (build_step_signal, build_theta, detect_poisson_sequence, iterate_logistic,
                  shift_spectrum, verify_theta_poisson)

MU, Q, K = 3.85, 6 * math.pi, 3
LEAD = 1000  # orbit index placed at t = 0


def main():
    orbit = iterate_logistic(MU, 0.4, 4000)
    theta = build_theta(build_step_signal(orbit, Q, origin=-LEAD * Q), K)
    print(f"logistic map at mu={MU}, intervals of length {Q:.4f}, decay {K}")
    print(f"theta is trustworthy from t = {theta.settled:.1f}")

    deltas = [0.05, 0.02, 0.01, 0.008, 0.006, 0.005]
    seq = detect_poisson_sequence(orbit, 3, deltas, offset=LEAD).scaled(Q)
    print("\nnear-returns of the orbit (window of 3 values)")
    print("   shift (intervals)   time shift      precision   achieved")
    for shift, t, d, err in zip(seq.shifts, seq.times, seq.precisions, seq.errors):
        print(f"   {shift:10d}       {t:12.4f}   {d:9.4f}   {err:.2e}")

    spec = shift_spectrum(seq, 2 * math.pi)
    print(f"\nresidues mod 2 pi cluster at {[round(c.center, 6) for c in spec.clusters]}")
    print("every shift is a whole number of periods:", spec.kappa_zero)

    interval = (Q, Q + 4 * math.pi)
    eps = 2 * seq.precisions[-1]
    rep = verify_theta_poisson(theta, seq, interval, eps)
    print(f"\nsup |theta(t + t_n) - theta(t)| on [{interval[0]:.2f}, {interval[1]:.2f}]:")
    for line in rep.summary_lines():
        print("  ", line)

    t = np.linspace(theta.settled, theta.settled + 500, 200_001)
    print(f"\nsampled range of theta: [{theta(t).min():.4f}, {theta(t).max():.4f}]"
          f" (bound 1/{K} = {1 / K:.4f})")


if __name__ == "__main__":
    main()
