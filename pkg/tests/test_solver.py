from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from conftest import make_problem
from rfdispatch import (BatteryParams, InteriorError, MarketParams, StressModel,
                        barrier_objective, convergence_gap, generate_signal,
                        soc_trajectory, solve, subgradient, true_objective)
from rfdispatch._kernel import rainflow_core
from rfdispatch.solver import SolverConfig, _backtrack, step


class TestTrajectory:
    def test_idle_holds_initial_soc(self, battery):
        s = soc_trajectory(np.zeros(4), np.zeros(4), battery)
        assert np.all(s == battery.s0)

    def test_single_full_charge(self):
        params = BatteryParams(E=0.25, p_max=2.0, eta_c=1.0, eta_d=1.0,
                               s0=0.001, t_s=0.25)
        s = soc_trajectory(np.array([1.0]), np.array([0.0]), params)
        assert s.tolist() == [0.001, 1.001]

    def test_round_trip_loss_can_leave_bounds(self):
        params = BatteryParams(E=0.25, p_max=2.0, eta_c=0.95, eta_d=0.95,
                               s0=0.001, t_s=0.25)
        s = soc_trajectory(np.array([1.0, 0.0]), np.array([0.0, 1.0]), params)
        assert s[1] == pytest.approx(0.001 + 0.95)
        assert s[2] == pytest.approx(0.001 + 0.95 - 1.0 / 0.95)
        assert s[2] < 0  # infeasible: efficiency loss shows up in the trajectory


class TestBarrierObjective:
    def test_large_barrier_weight_recovers_true_objective(self):
        problem = make_problem(seed=2, t_count=8)
        rng = np.random.default_rng(0)
        c = rng.uniform(0.2, 0.4, 8)
        d = c.copy()
        want = true_objective(c, d, problem)
        got = barrier_objective(c, d, problem, barrier_lambda=1e12)
        assert got == pytest.approx(want, abs=1e-6)

    def test_boundary_point_rejected(self):
        problem = make_problem(seed=2, t_count=4)
        c = np.array([0.0, 0.2, 0.2, 0.2])
        d = np.full(4, 0.2)
        with pytest.raises(InteriorError):
            barrier_objective(c, d, problem, barrier_lambda=10.0)

    def test_termwise_oracle(self):
        # independent re-implementation, term by term, on a fixed T=4 instance
        problem = make_problem(seed=5, t_count=4)
        p = problem.battery
        c = np.array([0.3, 0.1, 0.25, 0.4])
        d = np.array([0.2, 0.35, 0.15, 0.1])
        lam = 37.0

        s = [p.s0]
        for t in range(4):
            s.append(s[-1] + (c[t] * p.eta_c - d[t] / p.eta_d) * p.t_s / p.E)
        from rfdispatch import cycle_cost, mismatch_penalty
        pay = problem.market.lambda_c * problem.market.capacity * 4 * p.t_s
        pen = mismatch_penalty(c, d, problem.market, problem.signal, p.t_s)
        deg = p.lambda_r * cycle_cost(np.array(s), problem.model)
        logs = 0.0
        for t in range(1, 5):
            logs += np.log(p.s_max - s[t]) + np.log(s[t] - p.s_min)
        for t in range(4):
            logs += np.log(p.p_max - c[t]) + np.log(c[t])
            logs += np.log(p.p_max - d[t]) + np.log(d[t])
        want = -(pay - pen) + deg - logs / lam
        got = barrier_objective(c, d, problem, barrier_lambda=lam)
        assert got == pytest.approx(want, rel=1e-12)


class TestSubgradient:
    def test_linear_stress_constant_charge_slope(self):
        # no revenue, huge barrier weight: only the degradation slope remains
        k1 = 0.02
        battery = BatteryParams(E=2.0, p_max=1.0, eta_c=0.95, eta_d=0.9,
                                s0=0.5, t_s=0.25, cell_price=600_000.0)
        problem = make_problem(seed=3, t_count=10, battery=battery,
                               model=StressModel.linear(k1),
                               market=MarketParams(0.0, 0.0, 0.0))
        rng = np.random.default_rng(1)
        c = rng.uniform(0.1, 0.5, 10)
        d = rng.uniform(0.1, 0.5, 10)
        g_c, g_d = subgradient(c, d, problem, barrier_lambda=1e15)
        delta = c * battery.eta_c - d / battery.eta_d
        charge_slope = battery.lambda_r * k1 * battery.eta_c * battery.t_s / battery.E
        discharge_slope = battery.lambda_r * k1 * battery.t_s / (battery.eta_d * battery.E)
        assert np.allclose(g_c[delta > 0], charge_slope, rtol=1e-9)
        assert np.allclose(g_d[delta < 0], discharge_slope, rtol=1e-9)

    def test_matches_finite_differences(self):
        from rfdispatch import finite_difference_subgradient
        problem = make_problem(seed=6, t_count=8)
        rng = np.random.default_rng(2)
        lam = 500.0
        checked = 0
        for _ in range(40):
            c = rng.uniform(0.1, 0.45, 8)
            d = c * rng.uniform(0.7, 1.3, 8)
            s = soc_trajectory(c, d, problem.battery)
            if s[1:].min() < 0.08 or s[1:].max() > 0.92:
                continue
            counted = rainflow_core(s)
            junctions = {int(x) for x in counted[5] if x >= 0}
            mism = problem.market.capacity * problem.signal.r - (d - c)
            usable = np.array([t not in junctions and abs(mism[t]) > 1e-5
                               and abs(s[t + 1] - s[t]) > 1e-6 for t in range(8)])
            if not usable.any():
                continue
            ga = np.concatenate(subgradient(c, d, problem, lam))
            gf = np.concatenate(finite_difference_subgradient(c, d, problem, lam))
            mask = np.concatenate([usable, usable])
            rel = np.abs(ga - gf) / np.maximum(1.0, np.abs(gf))
            assert rel[mask].max() < 1e-5
            checked += int(mask.sum())
        assert checked >= 40

    def test_junction_uses_mean_of_owner_slopes(self):
        # realize the spanning-half profile 0 -> 0.5 -> 0.2 -> 0.8: interval 2
        # is shared by the deep charge half (depth 0.8) and the full-cycle
        # member (depth 0.3)
        battery = BatteryParams(E=0.25, p_max=4.0, eta_c=1.0, eta_d=1.0,
                                s0=0.01, t_s=0.25, cell_price=600_000.0)
        model = StressModel.polynomial(4.5e-4, 1.3)
        problem = make_problem(seed=4, t_count=3, battery=battery, model=model,
                               market=MarketParams(0.0, 0.0, 0.0))
        c = np.array([0.5 + 0.3, 0.3, 0.3 + 0.6])
        d = np.array([0.3, 0.3 + 0.3, 0.3])
        s = soc_trajectory(c, d, battery)
        assert np.allclose(s, [0.01, 0.51, 0.21, 0.81])
        g_c, _ = subgradient(c, d, problem, barrier_lambda=1e15)
        k = battery.lambda_r * battery.eta_c * battery.t_s / battery.E
        lo = model.derivative(0.3) * k
        hi = model.derivative(0.8) * k
        assert lo < g_c[2] < hi
        assert g_c[2] == pytest.approx(0.5 * (lo + hi), rel=1e-9)

    def test_non_interior_rejected(self):
        problem = make_problem(seed=2, t_count=3)
        with pytest.raises(InteriorError):
            subgradient(np.zeros(3), np.zeros(3), problem, 10.0)


class TestStep:
    def test_zero_subgradient_keeps_state(self, battery):
        c = np.full(5, 0.3)
        d = np.full(5, 0.3)
        c2, d2, ok = _backtrack(c, d, np.zeros(5), np.zeros(5), 0.1, battery, 1e-9, 30)
        assert ok
        assert np.array_equal(c2, c) and np.array_equal(d2, d)

    def test_step_toward_boundary_backtracks(self, battery):
        c = np.full(5, 1e-6)  # close to the lower power bound
        d = np.full(5, 0.05)
        g_c = np.full(5, 1.0)  # pushes c negative at full step
        c2, d2, ok = _backtrack(c, d, g_c, np.zeros(5), 0.05, battery, 1e-9, 30)
        assert ok
        assert np.all(c2 > 0)
        assert np.all(c - c2 < 0.05)  # at least one halving happened

    def test_exhausted_backtracking_rejects(self, battery):
        c = np.full(3, 0.5)
        d = np.full(3, 0.5)
        huge = np.full(3, 1e30)
        c2, d2, ok = _backtrack(c, d, huge, huge, 1.0, battery, 1e-9, 30)
        assert not ok
        assert np.array_equal(c2, c) and np.array_equal(d2, d)

    def test_step_api_descends_from_interior(self):
        problem = make_problem(seed=8, t_count=5)
        c = np.full(5, 0.4)
        d = np.full(5, 0.4)
        c2, d2, ok = step(c, d, 1e-3, problem, barrier_lambda=100.0)
        assert ok
        assert not np.array_equal(c2, c)


class TestSolve:
    def test_best_trace_nonincreasing_and_best_is_min(self):
        problem = make_problem(seed=10, t_count=24)
        sol = solve(problem, SolverConfig(alpha=1e-3, barrier_stages=3, inner_iters=150))
        running = np.minimum.accumulate(sol.U_trace)
        assert np.all(np.diff(running) <= 0)
        assert sol.U_best == running[-1]

    def test_solution_strictly_feasible(self):
        problem = make_problem(seed=10, t_count=24)
        sol = solve(problem, SolverConfig(alpha=1e-3, barrier_stages=3, inner_iters=150))
        p = problem.battery
        assert np.all(sol.c > 0) and np.all(sol.c < p.p_max)
        assert np.all(sol.d > 0) and np.all(sol.d < p.p_max)
        assert np.all(sol.s[1:] > p.s_min) and np.all(sol.s[1:] < p.s_max)

    def test_deterministic(self):
        cfg = SolverConfig(alpha=1e-3, barrier_stages=2, inner_iters=120)
        a = solve(make_problem(seed=12, t_count=20), cfg)
        b = solve(make_problem(seed=12, t_count=20), cfg)
        assert np.array_equal(a.U_trace, b.U_trace)
        assert np.array_equal(a.c, b.c) and np.array_equal(a.d, b.d)

    def test_zero_price_market_earns_and_degrades_nothing(self):
        # nothing to earn: the solver settles on the zero-cycling manifold
        # (charging exactly cancelling discharging), so degradation and net
        # SoC movement vanish up to subgradient chatter
        problem = make_problem(seed=13, t_count=12,
                               market=MarketParams(0.0, 0.0, 0.0))
        sol = solve(problem, SolverConfig(alpha=1e-4, barrier_stages=5, inner_iters=600))
        assert sol.degradation_cost < 1.0
        assert sol.revenue == 0.0
        assert np.abs(np.diff(sol.s)).sum() < 0.05

    def test_zero_inner_iterations_returns_initialization(self):
        problem = make_problem(seed=13, t_count=12)
        sol = solve(problem, SolverConfig(alpha=1e-3, inner_iters=0))
        assert sol.iterations == 0
        assert sol.U_trace.size == 1
        assert sol.U_best == sol.U_trace[0]

    def test_objective_convex_in_power(self):
        problem = make_problem(seed=14, t_count=10)
        rng = np.random.default_rng(3)
        p = problem.battery
        for _ in range(100):
            c1 = rng.uniform(0.05, 0.5, 10)
            d1 = rng.uniform(0.05, 0.5, 10)
            c2 = rng.uniform(0.05, 0.5, 10)
            d2 = rng.uniform(0.05, 0.5, 10)
            lam = rng.random()
            mid = true_objective(lam * c1 + (1 - lam) * c2, lam * d1 + (1 - lam) * d2, problem)
            chord = lam * true_objective(c1, d1, problem) \
                + (1 - lam) * true_objective(c2, d2, problem)
            assert mid <= chord + 1e-8


class TestConvergenceGap:
    def test_formula(self):
        assert convergence_gap(1.0, 0.01) == pytest.approx(0.005)

    def test_halving_alpha_halves_gap(self):
        assert convergence_gap(3.0, 0.02) == pytest.approx(2 * convergence_gap(3.0, 0.01))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            convergence_gap(-1.0, 0.1)
        with pytest.raises(ValueError):
            convergence_gap(1.0, 0.0)
