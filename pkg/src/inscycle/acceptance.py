"""End-to-end verification suite.

Each criterion is an independent callable returning a CriterionResult;
run_all() executes them in order, sharing the benchmark solve, and is what
both the CLI `reproduce` subcommand and the test suite drive.  Reference
values are the published benchmark boundary/duration numbers; tolerances
are fixed here, not configurable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cycles import analyze_cycles, ergodic_check, stationary_density
from .dynamics import SimulationConfig, build_dynamics, first_passage_times
from .errors import NoEquilibrium
from .formulas import demand, equilibrium_point
from .params import MarketParams
from .solver import SolverConfig, ode_residual, solve_equilibrium, sweep

__all__ = ["CriterionResult", "run_all"]

# published benchmark values: (axis, value) -> (M_low, M_high)
TABLE2 = [
    ("rho", -0.2, 0.3240, 2.1322),
    ("rho", 0.0, 0.3172, 2.7259),
    ("rho", 0.2, 0.2949, 2.9637),
    ("rho", 0.5, 0.2494, 2.6720),
    ("theta", 0.8, 0.3344, 1.1976),
    ("theta", 2.8, 0.3240, 2.1322),
    ("theta", 3.5, 0.3339, 3.6064),
    ("theta", 4.0, 0.3554, 10.3278),
    ("gamma", 0.02, 0.6444, 1.6011),
    ("gamma", 0.1, 0.4237, 1.9475),
    ("gamma", 0.2, 0.3240, 2.1322),
    ("gamma", 0.3, 0.2687, 2.2426),
]

BENCH_DURATIONS = (39.28, 33.82, 73.10)            # soft, hard, cycle
REDUCTION_BOUNDS = (0.15, 0.78)                    # no-investment barriers
REDUCTION_DURATIONS = (14.05, 11.92, 25.97)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0


def _rel(a, b):
    return abs(a - b) / abs(b)


class _Suite:
    """Caches the expensive shared artifacts across criteria."""

    def __init__(self):
        self._bench = None
        self._bench_dyn = None

    def benchmark_solution(self):
        if self._bench is None:
            self._bench = solve_equilibrium(MarketParams())
        return self._bench

    def benchmark_dynamics(self):
        if self._bench_dyn is None:
            self._bench_dyn = build_dynamics(self.benchmark_solution())
        return self._bench_dyn


def crit_benchmark_boundaries(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    sol = solve_equilibrium(MarketParams())
    dt = time.perf_counter() - t0
    suite._bench = sol
    errs = (_rel(sol.M_low, 0.3240), _rel(sol.M_high, 2.1322))
    ok = max(errs) < 0.02 and dt < 10.0
    return CriterionResult(
        "benchmark_boundaries", ok,
        f"M_low={sol.M_low:.4f} (ref 0.3240, {errs[0] * 100:.2f}%), "
        f"M_high={sol.M_high:.4f} (ref 2.1322, {errs[1] * 100:.2f}%), "
        f"{dt:.1f}s", dt)


def crit_table2_regression(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    base = MarketParams()
    fails = []
    for axis, value, ref_lo, ref_hi in TABLE2:
        rows = sweep(base, axis, [value])
        row = rows[0]
        tol = 0.03 if (axis, value) == ("theta", 4.0) else 0.02
        if row.status != "ok":
            fails.append(f"{axis}={value}: {row.status}")
            continue
        e_lo, e_hi = _rel(row.M_low, ref_lo), _rel(row.M_high, ref_hi)
        if max(e_lo, e_hi) >= tol:
            fails.append(f"{axis}={value}: {e_lo * 100:.2f}%/{e_hi * 100:.2f}%")
    dt = time.perf_counter() - t0
    ok = not fails and dt < 120.0
    detail = "all 12 rows within tolerance" if not fails else "; ".join(fails)
    return CriterionResult("table2_regression", ok, f"{detail}, {dt:.1f}s", dt)


def crit_no_investment_reduction(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    params = MarketParams(rho=0.0, r=0.0, mu=0.0)
    sol = solve_equilibrium(params)
    cyc = analyze_cycles(build_dynamics(sol))
    dt = time.perf_counter() - t0
    b_ok = (abs(sol.M_low - REDUCTION_BOUNDS[0]) <= 0.01
            and abs(sol.M_high - REDUCTION_BOUNDS[1]) <= 0.01)
    durs = (cyc.soft_duration, cyc.hard_duration, cyc.cycle_duration)
    d_ok = all(_rel(a, b) < 0.03 for a, b in zip(durs, REDUCTION_DURATIONS))
    return CriterionResult(
        "no_investment_reduction", b_ok and d_ok,
        f"barriers ({sol.M_low:.4f}, {sol.M_high:.4f}) vs (0.15, 0.78); "
        f"durations ({durs[0]:.2f}, {durs[1]:.2f}, {durs[2]:.2f}) vs "
        f"(14.05, 11.92, 25.97)", dt)


def crit_cycle_durations(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    cyc = analyze_cycles(suite.benchmark_dynamics())
    dt = time.perf_counter() - t0
    durs = (cyc.soft_duration, cyc.hard_duration, cyc.cycle_duration)
    ok = (all(_rel(a, b) < 0.03 for a, b in zip(durs, BENCH_DURATIONS))
          and cyc.soft_duration > cyc.hard_duration)
    return CriterionResult(
        "cycle_durations", ok,
        f"Ts={durs[0]:.2f} (39.28), Th={durs[1]:.2f} (33.82), "
        f"Tc={durs[2]:.2f} (73.10), soft > hard: "
        f"{cyc.soft_duration > cyc.hard_duration}", dt)


def crit_stationary_density(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    dyn = suite.benchmark_dynamics()
    grid = np.linspace(dyn.M_low, dyn.M_high, 2001)
    density, kappa = stationary_density(dyn, 2001)
    norm_err = abs(np.trapezoid(density, grid) - 1.0)
    monotone = bool(np.all(np.diff(density) < 0))
    rep = ergodic_check(dyn, grid, density,
                        SimulationConfig(horizon=1e5, dt=1e-3, seed=7))
    dt = time.perf_counter() - t0
    ok = norm_err < 1e-6 and monotone and rep.l1_distance < 0.05 and dt < 60.0
    return CriterionResult(
        "stationary_density", ok,
        f"norm_err={norm_err:.2e}, monotone={monotone}, "
        f"L1={rep.l1_distance:.4f}, {dt:.1f}s", dt)


def crit_property_suite(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    sol = suite.benchmark_solution()
    params = sol.params
    state = sol.state()
    pt = equilibrium_point(state, params)
    fails = []

    comp = np.max(np.abs(pt["D"] - demand(pt["p"], params)))
    if comp > 1e-10:
        fails.append(f"composition identity {comp:.2e}")

    R = state.R
    gi1 = np.max(np.abs(
        pt["p"] + pt["hI"]
        - R * (pt["D"] * params.eta + params.rho * pt["Y"] * params.sigma)))
    gi2 = np.max(np.abs(
        params.q + pt["hS"]
        - R * (pt["Y"] * params.sigma + params.rho * pt["D"] * params.eta)))
    if max(gi1, gi2) > 1e-12:
        fails.append(f"generator identities {max(gi1, gi2):.2e}")

    dyn = suite.benchmark_dynamics()
    drift_gap = np.max(np.abs(
        dyn.phi_grid - (sol.grid * params.r + R * dyn.sigma_grid**2)))
    if drift_gap > 1e-10:
        fails.append(f"drift identity {drift_gap:.2e}")

    res = np.max(np.abs(ode_residual(sol)))
    if res > 1e-6:
        fails.append(f"ODE residual {res:.2e}")

    b_res = max(abs(sol.u[0] - (1 + params.gamma)), abs(sol.u[-1] - 1.0),
                abs(sol.du[0]), abs(sol.du[-1]))
    if b_res > 1e-8:
        fails.append(f"boundary residuals {b_res:.2e}")

    if not (np.all(sol.u >= 1.0 - 1e-8)
            and np.all(sol.u <= 1 + params.gamma + 1e-12)
            and np.all(sol.du <= 1e-12)):
        fails.append("u corridor / monotonicity")
    if not np.all(sol.grid * R < 1.0):
        fails.append("M R < 1")
    if not np.all(pt["f"] > 0.0):
        fails.append("f > 0")

    fine = solve_equilibrium(params, SolverConfig(grid_size=4001))
    shift = max(abs(fine.M_low - sol.M_low), abs(fine.M_high - sol.M_high))
    if shift > 1e-7:
        fails.append(f"grid-doubling barrier shift {shift:.2e}")

    # constant-coefficient stationary density against the closed form
    class _Const:
        M_low, M_high = 0.3, 2.1
        phi = staticmethod(lambda M: np.full_like(np.asarray(M, float), 0.005))
        sigma_big = staticmethod(
            lambda M: np.full_like(np.asarray(M, float), 0.12))

    n = 20001
    g = np.linspace(_Const.M_low, _Const.M_high, n)
    dens, _ = stationary_density(_Const, n)
    a = 2 * 0.005 / 0.12**2
    exact = a * np.exp(a * (g - _Const.M_low)) / np.expm1(a * (_Const.M_high
                                                               - _Const.M_low))
    if np.max(np.abs(dens - exact)) > 1e-8:
        fails.append(f"const-coeff density {np.max(np.abs(dens - exact)):.2e}")

    # Monte Carlo first passage vs the hitting-time BVP
    cyc = analyze_cycles(dyn)
    fpt = first_passage_times(dyn, 300, dt=1e-3, seed=11)
    se = fpt.std(ddof=1) / np.sqrt(fpt.size)
    gap = abs(fpt.mean() - cyc.soft_duration)
    if gap > 0.05 * cyc.soft_duration + 2 * se:
        fails.append(f"MC first-passage gap {gap:.2f} (SE {se:.2f})")

    dt = time.perf_counter() - t0
    ok = not fails
    return CriterionResult(
        "property_suite", ok,
        "all identities and bounds hold" if ok else "; ".join(fails), dt)


def crit_non_existence(suite: _Suite) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        solve_equilibrium(MarketParams(theta=50.0))
        ok, detail = False, "theta=50 unexpectedly produced a solution"
    except NoEquilibrium as exc:
        ok = True
        detail = f"NoEquilibrium raised: {exc}"
    return CriterionResult("non_existence", ok, detail,
                           time.perf_counter() - t0)


CRITERIA = [
    crit_benchmark_boundaries,
    crit_table2_regression,
    crit_no_investment_reduction,
    crit_cycle_durations,
    crit_stationary_density,
    crit_property_suite,
    crit_non_existence,
]


def run_all() -> list:
    suite = _Suite()
    return [crit(suite) for crit in CRITERIA]
