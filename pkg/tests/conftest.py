from __future__ import annotations

import numpy as np
import pytest

from rfdispatch import (BatteryParams, DispatchProblem, MarketParams, SignalSpec,
                        StressModel, generate_signal)

# SoC profile realizing the worked counting example: seven cycles with
# ranges 0.3, 0.4, 0.8, 0.9, 0.3 (full), 0.8, 0.6.
FIXTURE = np.array([0.2, 0.5, 0.1, 0.9, 0.3, 0.6, 0.0, 0.8, 0.2])
FIXTURE_TABLE = [
    (0.3, "half"),
    (0.4, "half"),
    (0.8, "half"),
    (0.9, "half"),
    (0.3, "full"),
    (0.8, "half"),
    (0.6, "half"),
]


@pytest.fixture
def battery() -> BatteryParams:
    return BatteryParams(E=0.25, p_max=1.0, eta_c=0.95, eta_d=0.95,
                         s0=0.5, t_s=0.25, cell_price=600_000.0)


@pytest.fixture
def poly_model() -> StressModel:
    return StressModel.polynomial(4.5e-4, 1.3)


@pytest.fixture
def market() -> MarketParams:
    return MarketParams(lambda_c=50.0, lambda_p=150.0, capacity=0.8)


def make_problem(seed: int = 11, t_count: int = 12, battery: BatteryParams | None = None,
                 model: StressModel | None = None,
                 market: MarketParams | None = None) -> DispatchProblem:
    battery = battery or BatteryParams(E=0.25, p_max=1.0, eta_c=0.95, eta_d=0.95,
                                       s0=0.5, t_s=0.25, cell_price=600_000.0)
    return DispatchProblem(
        battery=battery,
        model=model or StressModel.polynomial(4.5e-4, 1.3),
        market=market or MarketParams(lambda_c=50.0, lambda_p=150.0, capacity=0.8),
        signal=generate_signal(seed, t_count, battery.t_s, SignalSpec()),
    )


def random_profile(rng: np.random.Generator, n_max: int = 50) -> np.ndarray:
    n = int(rng.integers(2, n_max + 1))
    return rng.random(n)
