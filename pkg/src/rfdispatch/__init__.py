"""Rainflow cycle-based battery degradation cost and degradation-aware dispatch.

The package counts charge/discharge cycles of state-of-charge profiles,
prices their degradation through convex depth-of-discharge stress
functions, solves battery dispatch problems with a log-barrier subgradient
method, and ships a frequency-regulation case study with benchmark
policies, property-based verification oracles, and a CLI.
"""

from .config import RunConfig, default_config, load_config
from .degradation import (BatteryParams, StressModel, cycle_cost, cycle_cost_totals,
                          degradation_cost_dollars, expected_lifetime, stress,
                          stress_derivative)
from .market import (EconomicsReport, MarketParams, RegulationSignal, SignalSpec,
                     annualize, assess_dispatch, generate_signal, mismatch_penalty,
                     policy_follow, policy_linear_cost, posterior_assessment,
                     read_signal_csv, revenue, revenue_gradient)
from .oracle import (PropertyReport, StepDecomposition, brute_force_optimum,
                     check_adjacent_merge, check_convexity, check_perturbation_bounds,
                     decompose_steps, finite_difference_subgradient,
                     reconstruct_profile, run_suite)
from .rainflow import (CycleSet, HalfCycle, SocProfile, TurningPoints,
                       count_cycles, cycle_depths_from_power, extract_turning_points,
                       half_cycle_depths, read_profile_csv, write_cycles_json)
from .solver import (DispatchProblem, InteriorError, Solution, SolverConfig,
                     barrier_objective, convergence_gap, soc_trajectory, solve,
                     step, subgradient, true_objective)

__version__ = "0.1.0"
