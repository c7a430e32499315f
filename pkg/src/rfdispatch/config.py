"""Run configuration: defaults, JSON loading, and object construction.

The shipped defaults are the regulation-market case study parameters:
a 1 MW / 0.25 MWh battery (15 minutes of max power) at 95% one-way
efficiency, 0.6 $/Wh cell price, 50 $/MW-h capacity payment, 150 $/MWh
mismatch penalty, 1 MW bid, 4-second intervals over a 2-hour horizon,
and the fitted polynomial stress function 4.5e-4 * d^1.3.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .degradation import BatteryParams, StressModel
from .market import MarketParams, SignalSpec
from .solver import SolverConfig

__all__ = ["RunConfig", "load_config", "default_config", "ENV_CONFIG"]

ENV_CONFIG = "RFDISPATCH_CONFIG"

_DEFAULTS: dict = {
    "battery": {
        "E": 0.25,
        "p_max": 1.0,
        "eta_c": 0.95,
        "eta_d": 0.95,
        "s_min": 0.0,
        "s_max": 1.0,
        "s0": 0.5,
        "t_s_seconds": 4.0,
        "cell_price": 600_000.0,
    },
    "stress": {"variant": "polynomial", "coefficients": [4.5e-4, 1.3]},
    "market": {
        "lambda_c": 50.0,
        "lambda_p": 150.0,
        "capacity": 1.0,
        "penalty_form": "signed",
    },
    "solver": {
        "alpha": 0.05,
        "barrier_lambda0": 10.0,
        "barrier_growth": 10.0,
        "barrier_stages": 5,
        "inner_iters": 2000,
        "interior_margin": 1e-9,
        "seed": 0,
    },
    "signal": {
        "source": "generate",
        "length": 1800,
        "rho": 0.9,
        "std": 0.35,
        "file": None,
    },
    "benchmark": {"linear_k1": 1e-4},
    "seed": 7,
    "out_dir": ".",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for the CLI pipelines."""

    battery: BatteryParams
    stress: StressModel
    market: MarketParams
    solver: SolverConfig
    signal_source: str
    signal_length: int
    signal_spec: SignalSpec
    signal_file: str | None
    linear_k1: float
    seed: int
    out_dir: Path
    raw: dict = field(repr=False, default_factory=dict)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ValueError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = value
    return out


def _build(raw: dict) -> RunConfig:
    bat = dict(raw["battery"])
    t_s_seconds = float(bat.pop("t_s_seconds"))
    if t_s_seconds <= 0:
        raise ValueError("battery.t_s_seconds must be positive")
    battery = BatteryParams(t_s=t_s_seconds / 3600.0, **bat)
    stress = StressModel(raw["stress"]["variant"], tuple(raw["stress"]["coefficients"]))
    market = MarketParams(**raw["market"])
    solver = SolverConfig(**raw["solver"])
    sig = raw["signal"]
    source = sig["source"]
    if source not in ("generate", "file"):
        raise ValueError("signal.source must be 'generate' or 'file'")
    if source == "file" and not sig.get("file"):
        raise ValueError("signal.source 'file' requires signal.file")
    if source == "file" and not Path(sig["file"]).exists():
        raise ValueError(f"signal file {sig['file']!r} does not exist")
    return RunConfig(
        battery=battery,
        stress=stress,
        market=market,
        solver=solver,
        signal_source=source,
        signal_length=int(sig["length"]),
        signal_spec=SignalSpec(rho=float(sig["rho"]), std=float(sig["std"])),
        signal_file=sig.get("file"),
        linear_k1=float(raw["benchmark"]["linear_k1"]),
        seed=int(raw["seed"]),
        out_dir=Path(raw["out_dir"]),
        raw=raw,
    )


def default_config() -> RunConfig:
    return _build(json.loads(json.dumps(_DEFAULTS)))


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a JSON config, falling back to the env var and then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return default_config()
    text = Path(path).read_text()
    try:
        override = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"{path}: not valid JSON ({err})") from None
    if not isinstance(override, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return _build(_merge(_DEFAULTS, override))
