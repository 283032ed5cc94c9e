"""Free-boundary solve: benchmark regression, invariants, sweeps, IO."""

import dataclasses

import numpy as np
import pytest

from inscycle import (
    MarketParams,
    SolverConfig,
    check_assumptions,
    load_solution,
    save_solution,
    solve_equilibrium,
    sweep,
)
from inscycle.errors import NoBracket, NoEquilibrium
from inscycle.solver import ode_residual

BENCH = MarketParams()


@pytest.fixture(scope="module")
def bench_sol():
    return solve_equilibrium(BENCH)


@pytest.fixture(scope="module")
def reduction_sol():
    return solve_equilibrium(MarketParams(rho=0.0, r=0.0, mu=0.0))


def test_benchmark_barriers(bench_sol):
    assert bench_sol.M_low == pytest.approx(0.3240, rel=1e-3)
    assert bench_sol.M_high == pytest.approx(2.1322, rel=1e-3)


def test_boundary_residuals(bench_sol):
    s = bench_sol
    assert abs(s.u[0] - 1.2) < 1e-8
    assert abs(s.u[-1] - 1.0) < 1e-8
    assert abs(s.du[0]) < 1e-8
    assert abs(s.du[-1]) < 1e-8


def test_value_slope_no_arbitrage(bench_sol):
    s = bench_sol
    assert s.u[0] + s.M_low * s.du[0] == pytest.approx(1.2, abs=1e-8)
    assert s.u[-1] + s.M_high * s.du[-1] == pytest.approx(1.0, abs=1e-7)


def test_corridor_and_monotonicity(bench_sol):
    s = bench_sol
    assert np.all(s.u >= 1.0 - 1e-8)
    assert np.all(s.u <= 1.2 + 1e-12)
    assert np.all(s.du <= 1e-12)
    assert np.all(s.u[1:-1] > 1.0) and np.all(s.u[1:-1] < 1.2)


def test_capacity_risk_aversion_bound(bench_sol):
    R = bench_sol.state().R
    assert np.all(bench_sol.grid * R < 1.0)


def test_price_strictly_decreasing(bench_sol):
    assert np.all(np.diff(bench_sol.p_star) < 0)


def test_ode_residual_central_difference(bench_sol):
    # three-point central differences are the independent oracle here
    assert np.max(np.abs(ode_residual(bench_sol))) < 1e-6


def test_deterministic(bench_sol):
    again = solve_equilibrium(BENCH)
    assert again.M_low == bench_sol.M_low
    assert again.M_high == bench_sol.M_high
    assert np.array_equal(again.u, bench_sol.u)
    assert np.array_equal(again.p_star, bench_sol.p_star)


def test_grid_doubling_stability(bench_sol):
    fine = solve_equilibrium(BENCH, SolverConfig(grid_size=4001))
    assert abs(fine.M_low - bench_sol.M_low) < 1e-7
    assert abs(fine.M_high - bench_sol.M_high) < 1e-7


def test_reduction_barriers(reduction_sol):
    assert reduction_sol.M_low == pytest.approx(0.15, abs=0.01)
    assert reduction_sol.M_high == pytest.approx(0.78, abs=0.01)


def test_reduction_investment_identically_zero(reduction_sol):
    assert np.max(np.abs(reduction_sol.Y_star)) < 1e-12


def test_assumptions_pass_on_benchmark(bench_sol):
    report = check_assumptions(bench_sol, BENCH)
    assert report.passed
    assert all(c.passed for c in report.checks)


def test_assumptions_catch_constructed_violation(bench_sol):
    broken = dataclasses.replace(bench_sol, du=bench_sol.du.copy())
    k = 700
    broken.du[k] = 0.05  # positive slope planted mid-grid
    report = check_assumptions(broken, BENCH)
    check = report.by_name["u_decreasing"]
    assert not check.passed
    assert check.worst_M == pytest.approx(bench_sol.grid[k])


def test_high_correlation_parameter_bound_passes():
    # alpha eta / q is about 5.04 at the benchmark, so rho = 0.9 is legal
    params = MarketParams(rho=0.9)
    assert abs(params.rho) <= params.alpha * params.eta / params.q


def test_no_bracket_without_sign_change():
    with pytest.raises(NoBracket):
        solve_equilibrium(BENCH, SolverConfig(bracket=(0.5, 0.9)))


def test_no_equilibrium_for_extreme_theta():
    with pytest.raises(NoEquilibrium) as exc:
        solve_equilibrium(MarketParams(theta=50.0))
    assert "invariant" in str(exc.value) or "assumption" in str(exc.value)


def test_sweep_gamma_matches_published_rows():
    rows = sweep(BENCH, "gamma", [0.02, 0.1, 0.2, 0.3])
    ref = [(0.6444, 1.6011), (0.4237, 1.9475), (0.3240, 2.1322),
           (0.2687, 2.2426)]
    for row, (lo, hi) in zip(rows, ref):
        assert row.status == "ok"
        assert row.M_low == pytest.approx(lo, rel=0.02)
        assert row.M_high == pytest.approx(hi, rel=0.02)
        assert row.dM == pytest.approx(row.M_high - row.M_low)


def test_sweep_records_failures_without_aborting():
    rows = sweep(BENCH, "theta", [2.8, 50.0, 0.8])
    assert [r.status for r in rows] == ["ok", "NoEquilibrium", "ok"]
    assert rows[1].M_low is None and rows[1].message


def test_sweep_rejects_unknown_axis():
    with pytest.raises(ValueError):
        sweep(BENCH, "loss_ratio", [0.1])


def test_solution_roundtrip_bit_exact(bench_sol, tmp_path):
    csv, js = tmp_path / "eq.csv", tmp_path / "eq.json"
    save_solution(bench_sol, csv, js)
    back = load_solution(csv, js)
    assert back.M_low == bench_sol.M_low
    assert back.M_high == bench_sol.M_high
    assert back.params == bench_sol.params
    for name in ("grid", "u", "du", "p_star", "D_star", "Y_star", "hI", "hS"):
        assert np.array_equal(getattr(back, name), getattr(bench_sol, name))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(grid_size=2)
    with pytest.raises(ValueError):
        SolverConfig(boundary_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(bracket=(1.0, 0.5))


def test_params_validation():
    with pytest.raises(ValueError):
        MarketParams(theta=0.0)
    with pytest.raises(ValueError):
        MarketParams(rho=1.0)
    with pytest.raises(ValueError):
        MarketParams(lam=0.01, r=0.02)
    with pytest.raises(ValueError):
        MarketParams(mu=0.0)  # below the risk-free rate
