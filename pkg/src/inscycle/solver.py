"""Free-boundary solver for the market-to-book ratio u(M).

The equilibrium ODE is integrated forward from the financing boundary,
where u = 1 + gamma and u' = 0 give regular initial data (R = 0 there).
A single scalar shooting parameter -- the financing boundary M_low --
is adjusted until the trajectory, stopped at the first point where u'
returns to zero, lands exactly on u = 1.  That stopping point is the
payout boundary M_high.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import NoBracket, NoEquilibrium
from .formulas import equilibrium_point, u_curvature
from .params import LocalState, MarketParams

__all__ = [
    "SolverConfig",
    "EquilibriumSolution",
    "AssumptionCheck",
    "AssumptionReport",
    "solve_equilibrium",
    "check_assumptions",
    "ode_residual",
    "sweep",
    "SweepRow",
    "save_solution",
    "load_solution",
]

SWEEP_AXES = ("rho", "theta", "gamma", "alpha", "eta", "sigma", "mu", "r", "lam")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings of the free-boundary solve.

    boundary_tol : residual tolerance on the four boundary conditions
    interior_tol : max allowed ODE residual on the resampled grid
    grid_size    : uniform output grid resolution
    max_iters    : outer root-finding iterations on M_low
    bracket      : initial search interval for M_low
    max_span     : integration cap on M - M_low before a trial is abandoned
    """

    boundary_tol: float = 1e-8
    interior_tol: float = 1e-6
    grid_size: int = 2001
    max_iters: int = 200
    bracket: tuple[float, float] = (1e-3, 1.0)
    max_span: float = 100.0

    def __post_init__(self):
        if not (self.boundary_tol > 0 and self.interior_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.grid_size < 3:
            raise ValueError("grid_size must be >= 3")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.bracket[0] < self.bracket[1]:
            raise ValueError("bracket must be ordered")
        if self.max_span <= 0:
            raise ValueError("max_span must be > 0")


@dataclass
class EquilibriumSolution:
    """Converged equilibrium on the uniform grid [M_low, M_high]."""

    M_low: float
    M_high: float
    grid: np.ndarray
    u: np.ndarray
    du: np.ndarray
    p_star: np.ndarray
    D_star: np.ndarray
    Y_star: np.ndarray
    hI: np.ndarray
    hS: np.ndarray
    params: MarketParams
    diagnostics: dict = field(default_factory=dict)

    def state(self) -> LocalState:
        """The whole grid as one array-valued local state."""
        return LocalState(M=self.grid, u=self.u, du=self.du)


# --------------------------------------------------------------------------
# shooting machinery
# --------------------------------------------------------------------------

# Floor on u during a trial integration; falling this far below the payout
# value 1 settles the sign of the shooting objective, and stopping there
# avoids the theta/u blow-up as u -> 0.
_U_FLOOR = 0.5


def _rhs(M, y, params):
    u, du = y
    upp = u_curvature(LocalState(M=M, u=u, du=du), params)
    return (du, upp)


def _shoot(M_low, params, cfg):
    """Integrate one trial from the financing boundary.

    Returns (objective, ivp_solution).  The objective is u - 1 at the
    first zero of u' when that event occurs; otherwise the trial is
    classified by the terminal deviation u - 1.
    """

    def ev_du_zero(M, y, params):
        return y[1]

    ev_du_zero.terminal = True
    ev_du_zero.direction = 1.0  # u' returning to 0 from below

    def ev_u_floor(M, y, params):
        return y[0] - _U_FLOOR

    ev_u_floor.terminal = True
    ev_u_floor.direction = -1.0

    def ev_u_escape(M, y, params):
        # strictly above the corridor ceiling: the trial curves upward
        return y[0] - (1.0 + params.gamma) - 1e-9

    ev_u_escape.terminal = True
    ev_u_escape.direction = 1.0

    sol = solve_ivp(
        _rhs,
        (M_low, M_low + cfg.max_span),
        (1.0 + params.gamma, 0.0),
        args=(params,),
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=(ev_du_zero, ev_u_floor, ev_u_escape),
        dense_output=True,
    )
    if sol.t_events[0].size:
        return sol.y_events[0][0][0] - 1.0, sol
    # no zero of u' was found: classify by where the trajectory ended up
    if sol.t_events[1].size:
        return sol.y_events[1][0][0] - 1.0, sol
    if sol.t_events[2].size:
        return params.gamma, sol
    return sol.y[0, -1] - 1.0, sol


def _find_bracket(objective, lo, hi, n_scan=9):
    """Locate a sign change of the shooting objective in [lo, hi].

    Scans a geometric ladder of trial points; returns ((a, fa), (b, fb))
    spanning the change, or None.
    """
    points = np.geomspace(lo, hi, n_scan)
    prev = None
    for x in points:
        fx = objective(x)
        if prev is not None and np.sign(fx) != np.sign(prev[1]):
            return prev, (x, fx)
        prev = (x, fx)
    return None


def solve_equilibrium(params: MarketParams,
                      cfg: SolverConfig = SolverConfig()) -> EquilibriumSolution:
    """Solve for (u, M_low, M_high) and assemble the full equilibrium.

    Raises NoBracket when the shooting objective does not change sign over
    the configured bracket, and NoEquilibrium when the root-find stalls or
    the converged candidate violates a model assumption.
    """
    evals = [0]

    def objective(M_low):
        evals[0] += 1
        obj, _ = _shoot(M_low, params, cfg)
        return obj

    found = _find_bracket(objective, *cfg.bracket)
    if found is None:
        raise NoBracket(
            f"shooting objective has no sign change on bracket {cfg.bracket}: "
            f"no financing boundary exists there (invariant 'bracket sign "
            f"change' failed)"
        )
    (a, fa), (b, fb) = found
    try:
        M_low, info = brentq(objective, a, b, xtol=1e-13, rtol=8.9e-16,
                             maxiter=cfg.max_iters, full_output=True)
    except RuntimeError as exc:  # pragma: no cover - brentq rarely stalls
        raise NoEquilibrium(f"root-find on M_low did not converge: {exc}")

    residual, sol = _shoot(M_low, params, cfg)
    if not sol.t_events[0].size:
        raise NoEquilibrium(
            "converged trial never returns u' to zero: no payout boundary "
            "(invariant 'du(M_high) = 0' failed)"
        )
    if abs(residual) > cfg.boundary_tol:
        raise NoEquilibrium(
            f"boundary residual |u(M_high) - 1| = {abs(residual):.3e} exceeds "
            f"boundary_tol = {cfg.boundary_tol}"
        )
    M_high = float(sol.t_events[0][0])

    grid = np.linspace(M_low, M_high, cfg.grid_size)
    u, du = sol.sol(grid)
    # the barriers carry exact boundary data; snapping removes event noise
    u[0] = 1.0 + params.gamma
    du[0] = 0.0
    du[-1] = 0.0

    state = LocalState(M=grid, u=u, du=du)
    pt = equilibrium_point(state, params)

    out = EquilibriumSolution(
        M_low=float(M_low), M_high=M_high, grid=grid, u=u, du=du,
        p_star=pt["p"], D_star=pt["D"], Y_star=pt["Y"],
        hI=pt["hI"], hS=pt["hS"], params=params,
    )
    report = check_assumptions(out, params,
                               boundary_tol=cfg.boundary_tol,
                               interior_tol=cfg.interior_tol)
    out.diagnostics = {
        "objective_evaluations": evals[0],
        "root_iterations": info.iterations,
        "boundary_residual": abs(residual),
        "max_ode_residual": report.by_name["ode_residual"].margin,
        "assumptions_passed": report.passed,
        "checks": report.to_dict(),
    }
    if not report.valid:
        failing = ", ".join(c.name for c in report.checks
                            if c.fatal and not c.passed)
        raise NoEquilibrium(
            f"converged solution violates model assumptions: {failing}"
        )
    return out


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    margin: float        # worst offending value, sign convention per check
    worst_M: float       # grid point where the worst margin occurs
    note: str = ""
    fatal: bool = True   # diagnostics-only checks do not void a solution


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def valid(self) -> bool:
        """True when no fatal check fails.  The worst-case profitability
        signs are diagnostics: they can fail on genuine equilibria at low
        robustness degrees, so they do not invalidate a solution."""
        return all(c.passed for c in self.checks if c.fatal)

    @property
    def by_name(self) -> dict:
        return {c.name: c for c in self.checks}

    def to_dict(self) -> dict:
        return {
            c.name: {"passed": c.passed, "margin": c.margin,
                     "worst_M": c.worst_M, "note": c.note}
            for c in self.checks
        }


def ode_residual(sol: EquilibriumSolution) -> np.ndarray:
    """Pointwise equilibrium-ODE residual on the interior grid.

    u'' is taken from three-point central differences of the stored u, so
    this is an oracle independent of the integrator: it returns
    lam - r  minus the right-hand side assembled from (u, u', u'')
    at grid[1:-1].
    """
    p = sol.params
    h = sol.grid[1] - sol.grid[0]
    upp = (sol.u[2:] - 2.0 * sol.u[1:-1] + sol.u[:-2]) / (h * h)
    M = sol.grid[1:-1]
    u = sol.u[1:-1]
    du = sol.du[1:-1]
    R = np.where(np.abs(du) < 1e-14, 0.0, -du / u)
    hI, hS = sol.hI[1:-1], sol.hS[1:-1]
    H = hI * hI + 2.0 * p.rho * hI * hS + hS * hS
    a = sol.D_star[1:-1] * p.eta
    b = sol.Y_star[1:-1] * p.sigma
    S2 = a * a + 2.0 * p.rho * a * b + b * b
    rhs = (p.theta / (2.0 * u) * H - M * p.r * R
           + (upp / (2.0 * u) - R * R) * S2)
    return (p.lam - p.r) - rhs


def _worst(values, grid, predicate_margin):
    """Index, margin at the worst grid point (minimum of the margin)."""
    i = int(np.argmin(predicate_margin))
    return float(predicate_margin[i]), float(grid[i])


def check_assumptions(sol: EquilibriumSolution, params: MarketParams,
                      boundary_tol: float = 1e-8,
                      interior_tol: float = 1e-6) -> AssumptionReport:
    """Per-invariant validation report of a (candidate) solution.

    Margins are defined so that positive means satisfied with room;
    boundary and residual checks report the offending magnitude instead.
    """
    g = sol.grid
    checks = []

    def add(name, passed, margin, worst_M, note=""):
        checks.append(AssumptionCheck(name, bool(passed), float(margin),
                                      float(worst_M), note))

    # barrier ordering
    add("barrier_order", 0.0 < sol.M_low < sol.M_high,
        sol.M_high - sol.M_low, sol.M_low, "0 < M_low < M_high")

    # boundary conditions (value matching and no-arbitrage)
    b_res = {
        "u(M_low) = 1+gamma": abs(sol.u[0] - (1.0 + params.gamma)),
        "u(M_high) = 1": abs(sol.u[-1] - 1.0),
        "du(M_low) = 0": abs(sol.du[0]),
        "du(M_high) = 0": abs(sol.du[-1]),
    }
    worst_name = max(b_res, key=b_res.get)
    add("boundary_conditions", b_res[worst_name] <= boundary_tol,
        b_res[worst_name], sol.M_low if "low" in worst_name else sol.M_high,
        f"worst: {worst_name}")

    # no-arbitrage restated through the aggregate value V = M u
    vp_low = sol.u[0] + sol.M_low * sol.du[0]
    vp_high = sol.u[-1] + sol.M_high * sol.du[-1]
    worst_vp = max(abs(vp_low - (1.0 + params.gamma)), abs(vp_high - 1.0))
    add("value_slope", worst_vp <= boundary_tol * (1.0 + sol.M_high),
        worst_vp, sol.M_high, "V'(M_low) = 1+gamma, V'(M_high) = 1")

    # corridor and monotonicity
    m_lo, M_lo = _worst(sol.u, g, sol.u - 1.0)
    add("u_above_payout_value", m_lo >= -boundary_tol, m_lo, M_lo, "u >= 1")
    m_hi, M_hi = _worst(sol.u, g, (1.0 + params.gamma) - sol.u)
    add("u_below_financing_value", m_hi >= -boundary_tol, m_hi, M_hi,
        "u <= 1 + gamma")
    m_du, M_du = _worst(sol.du, g, -sol.du)
    add("u_decreasing", m_du >= -1e-12, m_du, M_du, "du <= 0")

    # implicit risk aversion bound M R < 1
    R = sol.state().R
    m_mr, M_mr = _worst(R, g, 1.0 - g * R)
    add("capacity_risk_aversion", m_mr > 0.0, m_mr, M_mr, "M R(M) < 1")

    # interior-regime certificate f > 0
    from .formulas import f_condition
    fvals = f_condition(sol.state(), sol.p_star, sol.D_star, sol.Y_star,
                        params)
    m_f, M_f = _worst(fvals, g, fvals)
    add("interior_underwriting", m_f > 0.0, m_f, M_f, "f(M) > 0")

    # worst-case profitability diagnostics (non-fatal)
    prof_i = params.eta * (sol.p_star + sol.hI)
    m_pi, M_pi = _worst(prof_i, g, prof_i)
    checks.append(AssumptionCheck(
        "underwriting_profit", bool(m_pi >= -1e-12), float(m_pi),
        float(M_pi), "eta (p* + hI) >= 0", fatal=False))
    prof_s = params.sigma * (params.q + sol.hS)
    m_ps, M_ps = _worst(prof_s, g, prof_s)
    checks.append(AssumptionCheck(
        "investment_profit", bool(m_ps >= -1e-12), float(m_ps),
        float(M_ps), "sigma (q + hS) >= 0", fatal=False))

    # price monotonicity in capacity
    dp = np.diff(sol.p_star)
    m_dp, M_dp = _worst(dp, g[1:], -dp)
    add("price_decreasing", m_dp > 0.0, m_dp, M_dp,
        "p* strictly decreasing in M")

    # pointwise ODE residual via central differences; the difference oracle
    # is second order, so the bound scales with the squared grid spacing
    # (interior_tol is calibrated to a spacing of 1e-3)
    res = np.abs(ode_residual(sol))
    i = int(np.argmax(res))
    h = g[1] - g[0]
    res_tol = interior_tol * max(1.0, (h / 1e-3) ** 2)
    add("ode_residual", res[i] <= res_tol, res[i], g[1:-1][i],
        f"max |residual|, tol {res_tol:.2e}")

    # parameter-level correlation bound
    q = params.q
    bound = params.alpha * params.eta / q if q > 0 else np.inf
    add("correlation_bound", abs(params.rho) <= bound,
        bound - abs(params.rho), sol.M_low, "|rho| <= alpha eta / q")

    return AssumptionReport(checks)


# --------------------------------------------------------------------------
# parameter sweeps
# --------------------------------------------------------------------------


@dataclass
class SweepRow:
    axis: str
    value: float
    M_low: float | None
    M_high: float | None
    dM: float | None
    status: str           # "ok" or "NoEquilibrium"
    message: str = ""


def sweep(base: MarketParams, axis: str, values,
          cfg: SolverConfig = SolverConfig()) -> list:
    """Solve along one parameter axis, one row per value.

    Failed solves are recorded (status "NoEquilibrium") rather than
    aborting the sweep.  Successive solves warm-start the bracket around
    the previous financing boundary.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; pick one of {SWEEP_AXES}")
    rows = []
    prev_M_low = None
    for v in values:
        try:
            params = base.with_(**{axis: float(v)})
            run_cfg = cfg
            if prev_M_low is not None:
                lo = max(cfg.bracket[0], prev_M_low / 4.0)
                hi = min(cfg.bracket[1], prev_M_low * 4.0)
                if lo < hi:
                    run_cfg = SolverConfig(
                        boundary_tol=cfg.boundary_tol,
                        interior_tol=cfg.interior_tol,
                        grid_size=cfg.grid_size, max_iters=cfg.max_iters,
                        bracket=(lo, hi), max_span=cfg.max_span)
            try:
                s = solve_equilibrium(params, run_cfg)
            except NoBracket:
                if run_cfg is not cfg:
                    s = solve_equilibrium(params, cfg)  # warm bracket missed
                else:
                    raise
            rows.append(SweepRow(axis, float(v), s.M_low, s.M_high,
                                 s.M_high - s.M_low, "ok"))
            prev_M_low = s.M_low
        except (NoEquilibrium, ValueError) as exc:
            rows.append(SweepRow(axis, float(v), None, None, None,
                                 "NoEquilibrium", str(exc)))
    return rows


# --------------------------------------------------------------------------
# serialization: CSV of grid functions + JSON sidecar
# --------------------------------------------------------------------------

_CSV_COLUMNS = ("M", "u", "du", "p", "D", "Y", "hI", "hS")


def save_solution(sol: EquilibriumSolution, csv_path, json_path=None):
    """Write the grid functions as CSV and the scalars as a JSON sidecar.

    Floats are written with repr-level precision so a round-trip is
    bit-exact.
    """
    cols = (sol.grid, sol.u, sol.du, sol.p_star, sol.D_star, sol.Y_star,
            sol.hI, sol.hS)
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(",".join(_CSV_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    if json_path is not None:
        with open(json_path, "w", newline="\n") as fh:
            json.dump(
                {
                    "M_low": sol.M_low,
                    "M_high": sol.M_high,
                    "params": sol.params.to_dict(),
                    "diagnostics": sol.diagnostics,
                },
                fh, indent=2)
            fh.write("\n")


def load_solution(csv_path, json_path) -> EquilibriumSolution:
    """Rebuild an EquilibriumSolution from the CSV + JSON file pair."""
    with open(json_path) as fh:
        meta = json.load(fh)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    cols = {name: data[:, i] for i, name in enumerate(_CSV_COLUMNS)}
    return EquilibriumSolution(
        M_low=meta["M_low"], M_high=meta["M_high"], grid=cols["M"],
        u=cols["u"], du=cols["du"], p_star=cols["p"], D_star=cols["D"],
        Y_star=cols["Y"], hI=cols["hI"], hS=cols["hS"],
        params=MarketParams.from_dict(meta["params"]),
        diagnostics=meta.get("diagnostics", {}),
    )
