"""Frequency-regulation market model, benchmark policies, and economics.

The grid pays a per-MW standby fee for the bid regulation capacity and
charges a per-MWh penalty on the mismatch between the instructed dispatch
``C * r(t)`` and the battery's actual response ``d(t) - c(t)``.  Economics
reports follow the dispatch's degradation twice: once under the model the
policy optimized (``modeled``) and once re-scored with the reference
rainflow model (``actual``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .degradation import BatteryParams, StressModel, cycle_cost, expected_lifetime
from .rainflow import SocProfile

__all__ = [
    "MarketParams",
    "RegulationSignal",
    "SignalSpec",
    "EconomicsReport",
    "revenue",
    "mismatch_penalty",
    "revenue_gradient",
    "policy_follow",
    "policy_linear_cost",
    "posterior_assessment",
    "assess_dispatch",
    "annualize",
    "generate_signal",
    "read_signal_csv",
]

HOURS_PER_YEAR = 8760.0

SIGNED = "signed"
LITERAL = "literal"


@dataclass(frozen=True)
class MarketParams:
    """Regulation market terms.

    ``lambda_c`` is the capacity payment in dollars per MW of standby per
    hour, ``lambda_p`` the mismatch penalty in dollars per MWh, and
    ``capacity`` the fixed regulation bid in MW.  ``penalty_form`` selects
    how the mismatch is measured: ``signed`` penalizes
    ``|C*r - (d - c)|`` while ``literal`` penalizes ``|C*|r| - c - d|``.
    """

    lambda_c: float
    lambda_p: float
    capacity: float
    penalty_form: str = SIGNED

    def __post_init__(self) -> None:
        if self.lambda_c < 0 or self.lambda_p < 0 or self.capacity < 0:
            raise ValueError("market parameters must be nonnegative")
        if self.penalty_form not in (SIGNED, LITERAL):
            raise ValueError(f"unknown penalty form {self.penalty_form!r}")


@dataclass(frozen=True)
class RegulationSignal:
    """Per-unit regulation instruction in [-1, 1]; positive requests discharge."""

    r: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("signal must be a nonempty vector")
        if not np.all(np.isfinite(r)) or np.any(np.abs(r) > 1.0 + 1e-12):
            raise ValueError("signal values must be finite and lie in [-1, 1]")
        object.__setattr__(self, "r", r)

    def __len__(self) -> int:
        return self.r.size

    @property
    def r_c(self) -> np.ndarray:
        """Charging part: r = r_d - r_c with r_c * r_d = 0."""
        return np.maximum(-self.r, 0.0)

    @property
    def r_d(self) -> np.ndarray:
        return np.maximum(self.r, 0.0)


@dataclass(frozen=True)
class SignalSpec:
    """Synthetic signal generator settings: an AR(1) process clipped to [-1, 1].

    ``rho`` is the autocorrelation per ``base_step_s`` seconds (rescaled to
    the actual sample spacing) and ``std`` the stationary standard
    deviation before clipping.
    """

    rho: float = 0.9
    base_step_s: float = 4.0
    std: float = 0.35

    def __post_init__(self) -> None:
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must lie in [0, 1)")
        if self.std <= 0 or self.base_step_s <= 0:
            raise ValueError("std and base_step_s must be positive")


def generate_signal(seed: int, length: int, t_s: float,
                    spec: SignalSpec = SignalSpec()) -> RegulationSignal:
    """Deterministic synthetic regulation signal (zero-mean, band-limited)."""
    if length <= 0:
        raise ValueError("signal length must be positive")
    rho = spec.rho ** (t_s * 3600.0 / spec.base_step_s)
    sigma = spec.std * np.sqrt(max(1.0 - rho * rho, 1e-12))
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, sigma, size=length)
    x = np.empty(length)
    acc = rng.normal(0.0, spec.std)
    for t in range(length):
        acc = rho * acc + eps[t]
        x[t] = acc
    return RegulationSignal(r=np.clip(x, -1.0, 1.0))


def read_signal_csv(path) -> RegulationSignal:
    """Read a signal from CSV with header ``t,r``."""
    import csv

    rows: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["t", "r"]:
            raise ValueError(f"{path}: expected header 't,r'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append(float(row[1]))
            except (IndexError, ValueError):
                raise ValueError(f"{path}: line {lineno}: bad signal row") from None
    if not rows:
        raise ValueError(f"{path}: no samples")
    return RegulationSignal(r=np.array(rows))


def _mismatch(c: np.ndarray, d: np.ndarray, market: MarketParams,
              signal: RegulationSignal) -> np.ndarray:
    if market.penalty_form == SIGNED:
        return market.capacity * signal.r - (d - c)
    return market.capacity * np.abs(signal.r) - c - d


def mismatch_penalty(c: np.ndarray, d: np.ndarray, market: MarketParams,
                     signal: RegulationSignal, t_s: float) -> float:
    """Dollars of mismatch penalty over the horizon."""
    c, d = _as_power(c, d, len(signal))
    return float(market.lambda_p * t_s * np.sum(np.abs(_mismatch(c, d, market, signal))))


def revenue(c: np.ndarray, d: np.ndarray, market: MarketParams,
            signal: RegulationSignal, t_s: float) -> float:
    """Capacity payment minus mismatch penalty over the horizon."""
    c, d = _as_power(c, d, len(signal))
    payment = market.lambda_c * market.capacity * len(signal) * t_s
    return payment - mismatch_penalty(c, d, market, signal, t_s)


def revenue_gradient(c: np.ndarray, d: np.ndarray, market: MarketParams,
                     signal: RegulationSignal, t_s: float) -> tuple[np.ndarray, np.ndarray]:
    """(dR/dc, dR/dd); the sign convention at an exact kink is 0."""
    c, d = _as_power(c, d, len(signal))
    sgn = np.sign(_mismatch(c, d, market, signal))
    coef = market.lambda_p * t_s
    if market.penalty_form == SIGNED:
        return -coef * sgn, coef * sgn
    return coef * sgn, coef * sgn


def _as_power(c, d, t_count: int) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if c.shape != (t_count,) or d.shape != (t_count,):
        raise ValueError("power vectors must match the signal length")
    return c, d


def policy_follow(signal: RegulationSignal, params: BatteryParams,
                  capacity: float) -> tuple[np.ndarray, np.ndarray]:
    """Follow the instruction greedily, clipping at power and SoC limits."""
    T = len(signal)
    c = np.zeros(T)
    d = np.zeros(T)
    s = params.s0
    k_c = params.eta_c * params.t_s / params.E
    k_d = params.t_s / (params.eta_d * params.E)
    for t, r in enumerate(signal.r):
        if r >= 0:
            d[t] = max(0.0, min(capacity * r, params.p_max, (s - params.s_min) / k_d))
            s -= d[t] * k_d
        else:
            c[t] = max(0.0, min(-capacity * r, params.p_max, (params.s_max - s) / k_c))
            s += c[t] * k_c
    return c, d


def policy_linear_cost(problem, k1: float, config=None):
    """Benchmark: dispatch optimized under a linear stress model."""
    from .solver import SolverConfig, solve

    linear_problem = replace(problem, model=StressModel.linear(k1))
    return solve(linear_problem, config or SolverConfig())


def posterior_assessment(c: np.ndarray, d: np.ndarray, params: BatteryParams,
                         model: StressModel) -> float:
    """Re-score a dispatch's degradation in dollars with the reference model."""
    from .solver import soc_trajectory

    s = soc_trajectory(c, d, params)
    return params.lambda_r * cycle_cost(SocProfile(values=s, t_s=params.t_s), model)


@dataclass(frozen=True)
class EconomicsReport:
    """Dollar breakdown of one dispatch over a horizon.

    ``utility = payment - mismatch_penalty - actual_degradation``;
    ``lifetime_months`` always reflects the report's own degradation rate.
    """

    horizon_hours: float
    payment: float
    mismatch_penalty: float
    modeled_degradation: float
    actual_degradation: float
    utility: float
    lifetime_months: float
    annualization_factor: float = 1.0

    def to_table_dict(self) -> dict:
        return {
            "total_regulation_utility": self.utility,
            "regulation_service_payment": self.payment,
            "modeled_battery_degradation": self.modeled_degradation,
            "actual_battery_degradation": self.actual_degradation,
            "battery_life_expectancy_months": self.lifetime_months,
        }


def assess_dispatch(c: np.ndarray, d: np.ndarray, params: BatteryParams,
                    market: MarketParams, signal: RegulationSignal,
                    reference: StressModel,
                    modeled: StressModel | None = None) -> EconomicsReport:
    """Build the horizon economics report for a dispatch.

    ``modeled`` is the stress model the policy itself optimized (omit for a
    no-cost policy); ``reference`` scores the actual degradation.
    """
    horizon = len(signal) * params.t_s
    payment = market.lambda_c * market.capacity * horizon
    penalty = mismatch_penalty(c, d, market, signal, params.t_s)
    actual = posterior_assessment(c, d, params, reference)
    modeled_cost = 0.0
    if modeled is not None:
        modeled_cost = posterior_assessment(c, d, params, modeled)
    annual_rate = actual * HOURS_PER_YEAR / horizon
    lifetime = expected_lifetime(annual_rate, params) if annual_rate > 0 else float("inf")
    return EconomicsReport(
        horizon_hours=horizon,
        payment=payment,
        mismatch_penalty=penalty,
        modeled_degradation=modeled_cost,
        actual_degradation=actual,
        utility=payment - penalty - actual,
        lifetime_months=lifetime,
    )


def annualize(report: EconomicsReport, params: BatteryParams) -> EconomicsReport:
    """Scale a horizon report to a full year of identical operation."""
    if report.horizon_hours <= 0:
        raise ValueError("report horizon must be positive")
    f = HOURS_PER_YEAR / report.horizon_hours
    annual_actual = report.actual_degradation * f
    lifetime = expected_lifetime(annual_actual, params) if annual_actual > 0 else float("inf")
    return EconomicsReport(
        horizon_hours=HOURS_PER_YEAR,
        payment=report.payment * f,
        mismatch_penalty=report.mismatch_penalty * f,
        modeled_degradation=report.modeled_degradation * f,
        actual_degradation=annual_actual,
        utility=report.utility * f,
        lifetime_months=lifetime,
        annualization_factor=f,
    )
