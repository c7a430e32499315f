"""Depth-of-discharge stress functions, cycle cost, and lifetime economics.

A stress function maps one cycle's depth to the fraction of battery life it
consumes.  Summing it over all rainflow cycles of a SoC profile gives the
life loss of that profile; multiplying by the cell replacement cost turns
life loss into dollars.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rainflow import SocProfile, half_cycle_depths

__all__ = [
    "StressModel",
    "BatteryParams",
    "stress",
    "stress_derivative",
    "cycle_cost",
    "cycle_cost_totals",
    "degradation_cost_dollars",
    "expected_lifetime",
]

LINEAR = "linear"
EXPONENTIAL = "exponential"
POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class StressModel:
    """Convex, nondecreasing stress function on [0, 1] with value 0 at 0.

    Variants: ``linear`` (k1 * d), ``exponential`` (k2 * d * exp(k3 * d)),
    ``polynomial`` (k4 * d ** k5).  Coefficients must be nonnegative (a
    zero scale gives the degenerate cost-free model) and the polynomial
    exponent k5 must be >= 1, which keeps the derivative bounded at zero
    depth.
    """

    variant: str
    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        expected = {LINEAR: 1, EXPONENTIAL: 2, POLYNOMIAL: 2}
        if self.variant not in expected:
            raise ValueError(f"unknown stress variant {self.variant!r}")
        coeffs = tuple(float(k) for k in self.coefficients)
        if len(coeffs) != expected[self.variant]:
            raise ValueError(f"{self.variant} stress takes {expected[self.variant]} coefficient(s)")
        if any(k < 0 for k in coeffs):
            raise ValueError("stress coefficients must be nonnegative")
        if self.variant == POLYNOMIAL and coeffs[1] < 1.0:
            raise ValueError("polynomial exponent must be >= 1 for a convex stress function")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def linear(cls, k1: float) -> "StressModel":
        return cls(LINEAR, (k1,))

    @classmethod
    def exponential(cls, k2: float, k3: float) -> "StressModel":
        return cls(EXPONENTIAL, (k2, k3))

    @classmethod
    def polynomial(cls, k4: float, k5: float) -> "StressModel":
        return cls(POLYNOMIAL, (k4, k5))

    def value(self, d):
        d = np.asarray(d, dtype=float)
        if self.variant == LINEAR:
            out = self.coefficients[0] * d
        elif self.variant == EXPONENTIAL:
            k2, k3 = self.coefficients
            out = k2 * d * np.exp(k3 * d)
        else:
            k4, k5 = self.coefficients
            out = k4 * d ** k5
        return out if out.ndim else float(out)

    def derivative(self, d):
        d = np.asarray(d, dtype=float)
        if self.variant == LINEAR:
            out = np.full_like(d, self.coefficients[0])
        elif self.variant == EXPONENTIAL:
            k2, k3 = self.coefficients
            out = k2 * np.exp(k3 * d) * (1.0 + k3 * d)
        else:
            k4, k5 = self.coefficients
            out = np.where(d > 0.0, k4 * k5 * d ** (k5 - 1.0), k4 * k5 if k5 == 1.0 else 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class BatteryParams:
    """Battery physics and replacement economics.

    Units: ``E`` MWh, ``p_max`` MW, efficiencies dimensionless in (0, 1],
    SoC bounds and ``s0`` as fractions, ``t_s`` hours, ``cell_price``
    dollars per MWh of capacity.  ``lambda_r`` is the full replacement cost
    in dollars (cell_price * E).
    """

    E: float
    p_max: float
    eta_c: float = 1.0
    eta_d: float = 1.0
    s_min: float = 0.0
    s_max: float = 1.0
    s0: float = 0.5
    t_s: float = 1.0
    cell_price: float = 600_000.0

    def __post_init__(self) -> None:
        if not (self.E > 0 and self.p_max > 0 and self.t_s > 0 and self.cell_price > 0):
            raise ValueError("E, p_max, t_s and cell_price must be positive")
        if not (0.0 < self.eta_c <= 1.0 and 0.0 < self.eta_d <= 1.0):
            raise ValueError("efficiencies must lie in (0, 1]")
        if not (0.0 <= self.s_min < self.s_max <= 1.0):
            raise ValueError("need 0 <= s_min < s_max <= 1")
        if not (self.s_min < self.s0 < self.s_max):
            raise ValueError("initial SoC must lie strictly inside the SoC bounds")

    @property
    def lambda_r(self) -> float:
        return self.cell_price * self.E


def _check_depth(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if np.any(d < -1e-9) or np.any(d > 1.0 + 1e-9):
        raise ValueError("cycle depth must lie in [0, 1]")
    return np.clip(d, 0.0, 1.0)


def stress(model: StressModel, d) -> float | np.ndarray:
    """Life-loss fraction of one cycle of depth ``d``."""
    return model.value(_check_depth(d))


def stress_derivative(model: StressModel, d) -> float | np.ndarray:
    """Closed-form derivative of the stress function."""
    return model.derivative(_check_depth(d))


def cycle_cost(profile: SocProfile | np.ndarray, model: StressModel) -> float:
    """Total life loss of a profile: stress summed over every half cycle.

    A full cycle contributes through both of its members, i.e. twice the
    stress of its depth.
    """
    values = profile.values if isinstance(profile, SocProfile) else np.asarray(profile, float)
    depths, _ = half_cycle_depths(values)
    if depths.size == 0:
        return 0.0
    return float(np.sum(model.value(depths)))


def cycle_cost_totals(profile: SocProfile | np.ndarray, model: StressModel) -> tuple[float, float]:
    """Life loss under both counting conventions.

    Returns ``(per_half, grouped)``: the first sums stress over every half
    cycle (full cycles count twice), the second counts each full cycle
    once.  The solver and all dollar figures use the per-half total.
    """
    from ._kernel import rainflow_core

    values = profile.values if isinstance(profile, SocProfile) else np.asarray(profile, float)
    depths, _, kinds, _, _, _, _, _ = rainflow_core(values)
    if depths.size == 0:
        return 0.0, 0.0
    phi = model.value(depths)
    per_half = float(np.sum(phi))
    grouped = float(np.sum(np.where(kinds == 1, 0.5 * phi, phi)))
    return per_half, grouped


def degradation_cost_dollars(profile: SocProfile | np.ndarray, model: StressModel,
                             params: BatteryParams) -> float:
    """Replacement-cost dollars consumed by a profile's cycling."""
    return params.lambda_r * cycle_cost(profile, model)


def expected_lifetime(annual_degradation_cost: float, params: BatteryParams) -> float:
    """Battery life expectancy in months at a given annual degradation spend.

    One full replacement cost per year corresponds to 12 months of life.
    """
    if not annual_degradation_cost > 0:
        raise ValueError("annual degradation cost must be positive")
    return 12.0 * params.lambda_r / annual_degradation_cost
