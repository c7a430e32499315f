"""Independent brute-force and property oracles for the cycle cost model.

Each check is a small executable statement about the counter or the solver
(convexity of the cycle cost, merge monotonicity, bounded response to a
single step perturbation, gradient agreement, solver optimality against
exhaustive search).  Suites sample seeded random cases and aggregate
violations into replayable reports.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernel import rainflow_core, rainflow_depths
from .degradation import BatteryParams, StressModel
from .market import MarketParams, RegulationSignal, generate_signal, revenue
from .solver import (DispatchProblem, InteriorError, SolverConfig, barrier_objective,
                     soc_trajectory, solve, subgradient)

__all__ = [
    "StepDecomposition",
    "PropertyReport",
    "decompose_steps",
    "reconstruct_profile",
    "check_convexity",
    "check_adjacent_merge",
    "check_perturbation_bounds",
    "finite_difference_subgradient",
    "brute_force_optimum",
    "run_suite",
    "SUITES",
]

CONVEXITY_TOL = 1e-8
EXACT_TOL = 1e-10


@dataclass(frozen=True)
class StepDecomposition:
    """A profile as its initial value plus one signed jump per interval."""

    initial: float
    amplitudes: np.ndarray


def decompose_steps(profile) -> StepDecomposition:
    values = np.asarray(getattr(profile, "values", profile), dtype=float)
    return StepDecomposition(initial=float(values[0]), amplitudes=np.diff(values))


def reconstruct_profile(dec: StepDecomposition) -> np.ndarray:
    out = np.empty(dec.amplitudes.size + 1)
    out[0] = dec.initial
    np.cumsum(dec.amplitudes, out=out[1:])
    out[1:] += dec.initial
    return out


@dataclass
class PropertyReport:
    """Aggregated result of one property suite."""

    name: str
    samples: int
    violations: int
    worst: float
    seed: int
    reproducers: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "violations": self.violations,
            "worst": self.worst,
            "seed": self.seed,
            "passed": self.passed,
            "reproducers": self.reproducers,
        }

    def record(self, excess: float, tol: float, **inputs) -> None:
        if excess > tol:
            self.violations += 1
            if len(self.reproducers) < 5:
                self.reproducers.append({k: _jsonable(v) for k, v in inputs.items()})
        self.worst = max(self.worst, excess)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _cost(values: np.ndarray, model: StressModel) -> float:
    depths, _ = rainflow_depths(values)
    if depths.size == 0:
        return 0.0
    return float(np.sum(model.value(np.maximum(depths, 0.0))))


def check_convexity(s1: np.ndarray, s2: np.ndarray, lam: float,
                    model: StressModel) -> float:
    """Excess of f(blend) over the chord; nonpositive when convexity holds."""
    s1 = np.asarray(s1, float)
    s2 = np.asarray(s2, float)
    blend = lam * s1 + (1.0 - lam) * s2
    return _cost(blend, model) - (lam * _cost(s1, model) + (1.0 - lam) * _cost(s2, model))


def check_adjacent_merge(profile, i: int, model: StressModel) -> float:
    """Excess of the merged-step cost over the original; nonpositive when fine."""
    dec = decompose_steps(profile)
    amp = dec.amplitudes
    if not 0 <= i < amp.size - 1:
        raise ValueError("step index out of range")
    merged = np.concatenate([amp[:i], [amp[i] + amp[i + 1]], amp[i + 2:]])
    orig = reconstruct_profile(dec)
    new = reconstruct_profile(StepDecomposition(dec.initial, merged))
    return _cost(new, model) - _cost(orig, model)


def _sorted_depths(values: np.ndarray) -> np.ndarray:
    depths, _ = rainflow_depths(values)
    return np.sort(depths)[::-1]


def check_perturbation_bounds(profile, i: int, p: float) -> tuple[float, float]:
    """Excesses of (|sum of depth changes|, max |depth change|) over |p|.

    The perturbed profile adds ``p`` to every sample from index ``i`` on
    (``i`` equal to the length appends a new final sample).  Depth lists
    are sorted and zero-padded to equal length before differencing.
    """
    values = np.asarray(getattr(profile, "values", profile), dtype=float)
    if p == 0:
        raise ValueError("perturbation amplitude must be nonzero")
    if not 0 <= i <= values.size:
        raise ValueError("step index out of range")
    if i == values.size:
        pert = np.append(values, values[-1] + p)
    else:
        pert = values.copy()
        pert[i:] += p
    d0 = _sorted_depths(values)
    d1 = _sorted_depths(pert)
    L = max(d0.size, d1.size)
    a = np.zeros(L)
    a[:d0.size] = d0
    b = np.zeros(L)
    b[:d1.size] = d1
    diff = b - a
    return abs(float(diff.sum())) - abs(p), float(np.max(np.abs(diff), initial=0.0)) - abs(p)


def finite_difference_subgradient(c, d, problem: DispatchProblem, barrier_lambda: float,
                                  h: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Centered differences of the barrier objective, one coordinate at a time.

    Shrinks the step when a probe would leave the barrier domain.
    """
    c = np.array(c, dtype=float)
    d = np.array(d, dtype=float)
    T = c.size
    g_c = np.zeros(T)
    g_d = np.zeros(T)
    for arr, g in ((c, g_c), (d, g_d)):
        for t in range(T):
            x0 = arr[t]
            hh = h
            for _ in range(8):
                try:
                    arr[t] = x0 + hh
                    fp = barrier_objective(c, d, problem, barrier_lambda)
                    arr[t] = x0 - hh
                    fm = barrier_objective(c, d, problem, barrier_lambda)
                    break
                except InteriorError:
                    hh *= 0.1
            else:
                raise InteriorError("could not difference inside the domain")
            arr[t] = x0
            g[t] = (fp - fm) / (2.0 * hh)
    return g_c, g_d


def brute_force_optimum(problem: DispatchProblem, levels: int = 5):
    """Exhaustive grid search over per-interval net power.

    Only valid for tiny horizons (T <= 8, levels <= 7).  Feasibility is
    checked against the closed constraint set; returns
    ``(best_utility, c, d)`` in the maximization view.
    """
    T = problem.horizon
    if T > 8 or levels > 7:
        raise ValueError("grid too large for exhaustive search")
    p = problem.battery
    grid = np.linspace(-p.p_max, p.p_max, levels)
    best = -np.inf
    best_cd = None
    for combo in itertools.product(grid, repeat=T):
        b = np.asarray(combo)
        c = np.maximum(-b, 0.0)
        d = np.maximum(b, 0.0)
        s = soc_trajectory(c, d, p)
        if s[1:].min() < p.s_min - 1e-12 or s[1:].max() > p.s_max + 1e-12:
            continue
        depths, _ = rainflow_depths(s)
        deg = p.lambda_r * float(np.sum(problem.model.value(depths))) if depths.size else 0.0
        util = revenue(c, d, problem.market, problem.signal, p.t_s) - deg
        if util > best:
            best = util
            best_cd = (c, d)
    if best_cd is None:
        raise ValueError("no feasible grid point")
    return best, best_cd[0], best_cd[1]


# ---------------------------------------------------------------------------
# seeded suites

def _random_profile(rng: np.random.Generator, t_max: int = 50) -> np.ndarray:
    n = int(rng.integers(2, t_max + 1))
    kind = rng.integers(0, 3)
    if kind == 0:
        v = rng.random(n)
    elif kind == 1:
        v = np.clip(0.5 + np.cumsum(rng.normal(0.0, 0.08, n)), 0.0, 1.0)
    else:
        v = np.clip(0.5 + 0.4 * np.sin(np.linspace(0, rng.uniform(1, 6) * np.pi, n))
                    + rng.normal(0.0, 0.05, n), 0.0, 1.0)
    return v


_MODELS = {
    "linear": StressModel.linear(1.0),
    "exponential": StressModel.exponential(2e-4, 2.0),
    "polynomial": StressModel.polynomial(4.5e-4, 1.3),
}


def run_convexity_suite(samples: int, seed: int, t_max: int = 50,
                        models: dict[str, StressModel] | None = None) -> PropertyReport:
    rng = np.random.default_rng(seed)
    report = PropertyReport("convexity", 0, 0, -np.inf, seed)
    for name, model in (models or _MODELS).items():
        for _ in range(samples):
            n = int(rng.integers(2, t_max + 1))
            s1 = rng.random(n)
            s2 = rng.random(n)
            lam = float(rng.random())
            excess = check_convexity(s1, s2, lam, model)
            report.samples += 1
            report.record(excess, CONVEXITY_TOL, model=name, s1=s1, s2=s2, lam=lam)
    return report


def run_merge_suite(samples: int, seed: int) -> PropertyReport:
    rng = np.random.default_rng(seed)
    report = PropertyReport("merge", 0, 0, -np.inf, seed)
    models = list(_MODELS.items())
    for _ in range(samples):
        v = _random_profile(rng)
        if v.size < 3:
            continue
        i = int(rng.integers(0, v.size - 2))
        name, model = models[int(rng.integers(0, len(models)))]
        excess = check_adjacent_merge(v, i, model)
        report.samples += 1
        report.record(excess, EXACT_TOL, model=name, profile=v, i=i)
    return report


def run_perturbation_suite(samples: int, seed: int) -> PropertyReport:
    rng = np.random.default_rng(seed)
    report = PropertyReport("perturbation", 0, 0, -np.inf, seed)
    for _ in range(samples):
        v = _random_profile(rng)
        i = int(rng.integers(0, v.size + 1))
        p = float(rng.normal(0.0, 0.3))
        if p == 0.0:
            continue
        sum_excess, max_excess = check_perturbation_bounds(v, i, p)
        report.samples += 1
        report.record(max(sum_excess, max_excess), EXACT_TOL, profile=v, i=i, p=p)
    return report


def _toy_problem(seed: int, t_count: int = 12) -> DispatchProblem:
    battery = BatteryParams(E=0.25, p_max=1.0, eta_c=0.95, eta_d=0.95,
                            s0=0.5, t_s=0.25, cell_price=600_000.0)
    market = MarketParams(lambda_c=50.0, lambda_p=150.0, capacity=0.8)
    signal = generate_signal(seed, t_count, battery.t_s, )
    return DispatchProblem(battery=battery, model=StressModel.polynomial(4.5e-4, 1.3),
                           market=market, signal=signal)


def _interior_point(rng: np.random.Generator, problem: DispatchProblem):
    """Rejection-sample a strictly interior, well-conditioned (c, d)."""
    p = problem.battery
    T = problem.horizon
    for _ in range(500):
        c = rng.uniform(0.08 * p.p_max, 0.6 * p.p_max, T)
        d = c * rng.uniform(0.6, 1.4, T)
        d = np.clip(d, 0.05 * p.p_max, 0.9 * p.p_max)
        s = soc_trajectory(c, d, p)
        margin = 0.05 * (p.s_max - p.s_min)
        if s[1:].min() > p.s_min + margin and s[1:].max() < p.s_max - margin:
            return c, d, s
    raise RuntimeError("no interior sample found")


def run_gradient_suite(samples: int, seed: int, rel_tol: float = 1e-4) -> PropertyReport:
    """Analytic subgradient vs centered differences at interior points.

    Junction intervals, coordinates at a mismatch-penalty kink, and
    near-flat SoC steps are excluded: those are exactly the nonsmooth
    points where a two-sided difference is not the derivative.
    """
    rng = np.random.default_rng(seed)
    report = PropertyReport("gradient", 0, 0, -np.inf, seed)
    barrier_lambda = 1e3
    h = 1e-6
    while report.samples < samples:
        problem = _toy_problem(int(rng.integers(0, 2 ** 31)), t_count=10)
        c, d, s = _interior_point(rng, problem)
        counted = rainflow_core(s)
        junctions = set(int(x) for x in counted[5] if x >= 0)
        mism = problem.market.capacity * problem.signal.r - (d - c)
        usable = np.array([
            t not in junctions and abs(mism[t]) > 10 * h
            and abs(s[t + 1] - s[t]) > 10 * h * problem.battery.t_s / problem.battery.E
            for t in range(problem.horizon)
        ])
        if not usable.any():
            continue
        ga_c, ga_d = subgradient(c, d, problem, barrier_lambda)
        gf_c, gf_d = finite_difference_subgradient(c, d, problem, barrier_lambda, h)
        rel = np.maximum(np.abs(ga_c - gf_c) / np.maximum(1.0, np.abs(gf_c)),
                         np.abs(ga_d - gf_d) / np.maximum(1.0, np.abs(gf_d)))
        excess = float(rel[usable].max()) - rel_tol
        report.samples += 1
        report.record(excess, 0.0, c=c, d=d, signal=problem.signal.r)
    return report


def run_solver_gap_suite(samples: int, seed: int, t_count: int = 6,
                         levels: int = 5) -> PropertyReport:
    """Solver best objective vs exhaustive grid optimum on toy horizons."""
    rng = np.random.default_rng(seed)
    report = PropertyReport("solver-gap", 0, 0, -np.inf, seed)
    config = SolverConfig(alpha=2e-4, barrier_lambda0=10.0, barrier_growth=10.0,
                          barrier_stages=6, inner_iters=2500, stall_iters=300)
    for _ in range(samples):
        instance_seed = int(rng.integers(0, 2 ** 31))
        problem = _toy_problem(instance_seed, t_count=t_count)
        grid_util, _, _ = brute_force_optimum(problem, levels=levels)
        sol = solve(problem, config)
        allowance = sol.gap_bound() + 1e-3
        excess = grid_util - sol.utility - allowance
        report.samples += 1
        report.record(excess, 0.0, instance_seed=instance_seed, grid=grid_util,
                      solver=sol.utility, allowance=allowance)
    return report


SUITES = {
    "convexity": run_convexity_suite,
    "merge": run_merge_suite,
    "perturbation": run_perturbation_suite,
    "gradient": run_gradient_suite,
    "solver-gap": run_solver_gap_suite,
}


def run_suite(name: str, samples: int, seed: int) -> list[PropertyReport]:
    """Run one named suite (or ``all``) and return its reports."""
    if name == "all":
        return [fn(samples, seed) for fn in SUITES.values()]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return [SUITES[name](samples, seed)]
