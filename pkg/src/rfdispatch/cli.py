"""Command-line front end: count, cost, optimize, benchmark, verify.

Exit codes: 0 success, 1 property violation or infeasible problem,
2 input error (bad file, bad config, bad arguments).  All file outputs are
written atomically and are byte-identical for identical config and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import oracle
from .config import ENV_CONFIG, RunConfig, load_config
from .degradation import StressModel, cycle_cost_totals
from .market import (RegulationSignal, annualize, assess_dispatch, generate_signal,
                     policy_follow, read_signal_csv)
from .rainflow import count_cycles, cycles_to_dicts, read_profile_csv
from .solver import DispatchProblem, InteriorError, Solution, solve

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _print_rows(rows: list[tuple], fmt: str, header: tuple) -> None:
    if fmt == "csv":
        print(",".join(header))
        for row in rows:
            print(",".join(str(x) for x in row))
        return
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(str(x).ljust(w) for x, w in zip(row, widths)))


def cmd_count(args, cfg: RunConfig) -> int:
    profile = read_profile_csv(args.profile, t_s=cfg.battery.t_s)
    cycles = count_cycles(profile)
    if args.format == "json":
        print(_dump_json(cycles_to_dicts(cycles)), end="")
    else:
        rows = []
        for depth, kind, members in cycles.grouped():
            direction = "+".join(dict.fromkeys(m.direction for m in members))
            ivals = sorted(set(t for m in members for t in m.intervals))
            junc = sorted(set(t for m in members for t in m.junction_intervals))
            rows.append((f"{depth:.6g}", direction, kind,
                         " ".join(map(str, ivals)), " ".join(map(str, junc))))
        _print_rows(rows, args.format, ("depth", "direction", "kind", "intervals", "junctions"))
    out = Path(args.out) / "cycles.json"
    _write_atomic(out, _dump_json(cycles_to_dicts(cycles)))
    return EXIT_OK


def cmd_cost(args, cfg: RunConfig) -> int:
    profile = read_profile_csv(args.profile, t_s=cfg.battery.t_s)
    per_half, grouped = cycle_cost_totals(profile, cfg.stress)
    dollars = cfg.battery.lambda_r * per_half
    payload = {
        "life_loss": per_half,
        "life_loss_full_cycles_counted_once": grouped,
        "degradation_cost_dollars": dollars,
        "replacement_cost_dollars": cfg.battery.lambda_r,
    }
    if args.format == "json":
        print(_dump_json(payload), end="")
    else:
        rows = [(k, f"{v:.10g}") for k, v in payload.items()]
        _print_rows(rows, args.format, ("quantity", "value"))
    return EXIT_OK


def _signal_for(cfg: RunConfig, seed: int) -> RegulationSignal:
    if cfg.signal_source == "file":
        return read_signal_csv(cfg.signal_file)
    return generate_signal(seed, cfg.signal_length, cfg.battery.t_s, cfg.signal_spec)


def _solution_payload(sol: Solution) -> dict:
    return {
        "U_best": sol.U_best,
        "utility": sol.utility,
        "revenue": sol.revenue,
        "degradation_cost": sol.degradation_cost,
        "barrier_value": sol.barrier_value,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "rejected_steps": sol.rejected_steps,
        "subgradient_norm_bound": sol.g_max,
        "convergence_gap_bound": sol.gap_bound(),
        "simultaneous_energy_mwh": sol.simultaneous_energy_mwh,
        "trace_first": float(sol.U_trace[0]),
        "trace_last": float(sol.U_trace[-1]),
    }


def _trace_csv(sol: Solution, signal: RegulationSignal) -> str:
    lines = ["t,c,d,s,r"]
    for t in range(sol.c.size):
        lines.append(f"{t},{float(sol.c[t])!r},{float(sol.d[t])!r},"
                     f"{float(sol.s[t + 1])!r},{float(signal.r[t])!r}")
    return "\n".join(lines) + "\n"


def cmd_optimize(args, cfg: RunConfig) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    signal = _signal_for(cfg, seed)
    problem = DispatchProblem(battery=cfg.battery, model=cfg.stress,
                              market=cfg.market, signal=signal)
    solver_cfg = cfg.solver
    if args.iters is not None:
        solver_cfg = dataclasses.replace(solver_cfg, inner_iters=args.iters)
    sol = solve(problem, solver_cfg)
    report = assess_dispatch(sol.c, sol.d, cfg.battery, cfg.market, signal,
                             cfg.stress, modeled=cfg.stress)
    annual = annualize(report, cfg.battery)
    payload = {
        "solver": _solution_payload(sol),
        "horizon": dataclasses.asdict(report),
        "annual": annual.to_table_dict(),
    }
    out_dir = Path(args.out)
    _write_atomic(out_dir / "solution.csv", _trace_csv(sol, signal))
    _write_atomic(out_dir / "report.json", _dump_json(payload))
    if args.format == "json":
        print(_dump_json(payload), end="")
    else:
        rows = [(k, f"{v:.6g}" if isinstance(v, float) else str(v))
                for k, v in _solution_payload(sol).items()]
        _print_rows(rows, "text", ("quantity", "value"))
        print(f"\nwrote {out_dir / 'solution.csv'} and {out_dir / 'report.json'}")
    return EXIT_OK


def _benchmark_payload(cfg: RunConfig, seed: int) -> dict:
    signal = _signal_for(cfg, seed)
    problem = DispatchProblem(battery=cfg.battery, model=cfg.stress,
                              market=cfg.market, signal=signal)
    sol_rf = solve(problem, cfg.solver)
    rep_rf = assess_dispatch(sol_rf.c, sol_rf.d, cfg.battery, cfg.market, signal,
                             cfg.stress, modeled=cfg.stress)

    c_f, d_f = policy_follow(signal, cfg.battery, cfg.market.capacity)
    rep_nc = assess_dispatch(c_f, d_f, cfg.battery, cfg.market, signal,
                             cfg.stress, modeled=None)

    linear_model = StressModel.linear(cfg.linear_k1)
    sol_lin = solve(dataclasses.replace(problem, model=linear_model), cfg.solver)
    rep_lin = assess_dispatch(sol_lin.c, sol_lin.d, cfg.battery, cfg.market, signal,
                              cfg.stress, modeled=linear_model)

    return {
        "seed": seed,
        "horizon_hours": rep_rf.horizon_hours,
        "policies": {
            "rainflow": annualize(rep_rf, cfg.battery).to_table_dict(),
            "no_cost": annualize(rep_nc, cfg.battery).to_table_dict(),
            "linear": annualize(rep_lin, cfg.battery).to_table_dict(),
        },
        "solver": {
            "rainflow": _solution_payload(sol_rf),
            "linear": _solution_payload(sol_lin),
        },
    }


def cmd_benchmark(args, cfg: RunConfig) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    payload = _benchmark_payload(cfg, seed)
    out = Path(args.out) / "benchmark.json"
    _write_atomic(out, _dump_json(payload))
    if args.format == "json":
        print(_dump_json(payload), end="")
    else:
        pol = payload["policies"]
        keys = ["total_regulation_utility", "regulation_service_payment",
                "modeled_battery_degradation", "actual_battery_degradation",
                "battery_life_expectancy_months"]
        rows = [(k,) + tuple(f"{pol[p][k]:.4g}" for p in ("rainflow", "no_cost", "linear"))
                for k in keys]
        _print_rows(rows, args.format, ("annual", "rainflow", "no_cost", "linear"))
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    reports = oracle.run_suite(args.suite, args.samples, seed)
    payload = [r.to_dict() for r in reports]
    out = Path(args.out) / "verify.json"
    _write_atomic(out, _dump_json(payload))
    if args.format == "json":
        print(_dump_json(payload), end="")
    else:
        rows = [(r.name, r.samples, r.violations, f"{r.worst:.3e}",
                 "pass" if r.passed else "FAIL") for r in reports]
        _print_rows(rows, args.format, ("suite", "samples", "violations", "worst", "result"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfdispatch",
        description="Cycle-counting battery degradation cost and degradation-aware dispatch",
    )
    parser.add_argument("--config", default=None,
                        help=f"JSON config path (or set ${ENV_CONFIG})")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", choices=("text", "json", "csv"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="rainflow-count a SoC profile CSV")
    p.add_argument("--profile", required=True, help="CSV with header t,soc")
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("cost", help="degradation cost of a SoC profile CSV")
    p.add_argument("--profile", required=True, help="CSV with header t,soc")
    p.set_defaults(fn=cmd_cost)

    p = sub.add_parser("optimize", help="solve the dispatch problem")
    p.add_argument("--iters", type=int, default=None,
                   help="override inner iterations per barrier stage")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("benchmark", help="compare rainflow, no-cost and linear policies")
    p.set_defaults(fn=cmd_benchmark)

    p = sub.add_parser("verify", help="run property-oracle suites")
    p.add_argument("--suite", default="all",
                   choices=sorted(oracle.SUITES) + ["all"])
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ValueError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.fn(args, cfg)
    except (ValueError, OSError) as err:
        if isinstance(err, InteriorError):
            print(f"infeasible: {err}", file=sys.stderr)
            return EXIT_VIOLATION
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
