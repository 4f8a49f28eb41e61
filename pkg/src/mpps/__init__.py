"""Poisson stable and modulo-periodic-Poisson-stable signals and the bounded
solutions of periodic linear and quasilinear ODE systems they force."""

from .analysis import (ConvergenceReport, ShiftSpectrum, check_composition, check_mpps_sum,
                       extract_periodic_component, shift_spectrum, verify_poisson)
from .config import load_config, load_example
from .errors import (ConditionFailed, ConfigError, ConfigurationError, CoverageError,
                     DomainExit, InsufficientRange, MppsError, NoContraction, NotFound,
                     OutOfRange, SingularPeriodMap, StepFailure)
from .pipeline import RunOptions, RunResult, config_sequence, run
from .floquet import (FloquetData, PeriodicMatrixFn, check_dichotomy, check_lemma1_bound,
                      constant_matrix, estimate_dichotomy, floquet_data, matrix_norm,
                      multipliers, transition_matrix)
from .recurrence import (LogisticOrbit, PoissonSequence, StepSignal, ThetaSignal,
                         build_step_signal, build_theta, detect_poisson_sequence,
                         iterate_logistic, verify_theta_poisson)
from .solutions import (ConditionReport, MppsForcing, QuasilinearSystem, ThetaPowers,
                        Trajectory, bounded_solution_linear, check_conditions, picard_solve,
                        simulate_forward, solve_mpps_coefficients, verify_gronwall_decay)

__version__ = "0.1.0"
