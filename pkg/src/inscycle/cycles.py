"""Expected phase durations and the stationary capacity distribution.

Soft-market duration Ts(M) is the expected time for capacity to reach the
payout barrier from M; hard-market duration Th(M) the expected time to
fall back to the financing barrier.  Both solve

    -1 = Phi(M) T'(M) + (1/2) Sigma(M)^2 T''(M)

with a Dirichlet zero at the target barrier and a reflecting (Neumann)
condition at the other one.  The stationary density has the closed form

    pi(M) = kappa / Sigma(M)^2 * exp( 2 int_{M_low}^{M} Phi/Sigma^2 dz ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from .dynamics import CapacityDynamics, SimulationConfig, simulate
from .errors import SingularSystem

__all__ = [
    "CycleAnalytics",
    "ErgodicReport",
    "phase_durations",
    "stationary_density",
    "ergodic_check",
    "analyze_cycles",
]


@dataclass
class CycleAnalytics:
    grid: np.ndarray
    Ts: np.ndarray            # expected time to reach M_high from each M
    Th: np.ndarray            # expected time to reach M_low from each M
    soft_duration: float      # Ts at the financing barrier
    hard_duration: float      # Th at the payout barrier
    cycle_duration: float
    density: np.ndarray       # stationary density on grid
    kappa: float              # its normalization constant


def _tridiag_rows(grid, phi, S2):
    h = grid[1] - grid[0]
    lower = S2 / (2.0 * h * h) - phi / (2.0 * h)   # coefficient of T_{i-1}
    diag = -S2 / (h * h)                           # coefficient of T_i
    upper = S2 / (2.0 * h * h) + phi / (2.0 * h)   # coefficient of T_{i+1}
    return lower, diag, upper


def _solve_bvp(grid, phi, S2, neumann_at_low):
    """Hitting-time two-point BVP by second-order central differences.

    The Neumann end uses a ghost point (T' = 0 central => T_{-1} = T_1),
    which folds the off-grid neighbor into the adjacent band entry and
    keeps the scheme second order.  The opposite end is Dirichlet zero.
    """
    n = grid.size
    lower, diag, upper = _tridiag_rows(grid, phi, S2)
    ab = np.zeros((3, n))
    b = -np.ones(n)
    ab[1, :] = diag
    ab[0, 1:] = upper[:-1]
    ab[2, :-1] = lower[1:]
    if neumann_at_low:
        ab[0, 1] = upper[0] + lower[0]
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        b[-1] = 0.0
    else:
        ab[2, -2] = lower[-1] + upper[-1]
        ab[1, 0] = 1.0
        ab[0, 1] = 0.0
        b[0] = 0.0
    try:
        T = solve_banded((1, 1), ab, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"tridiagonal hitting-time solve failed: {exc}")
    if not np.all(np.isfinite(T)):
        raise SingularSystem(
            "tridiagonal hitting-time solve produced non-finite values "
            "(Sigma^2 -> 0 somewhere on the grid)"
        )
    return T


def phase_durations(dyn: CapacityDynamics, grid_size: int = 2001):
    """Expected soft/hard phase duration functions (Ts, Th) on a uniform
    grid of grid_size points spanning the barriers."""
    grid = np.linspace(dyn.M_low, dyn.M_high, grid_size)
    phi = dyn.phi(grid)
    S2 = dyn.sigma_big(grid) ** 2
    Ts = _solve_bvp(grid, phi, S2, neumann_at_low=True)
    Th = _solve_bvp(grid, phi, S2, neumann_at_low=False)
    return Ts, Th


def stationary_density(dyn: CapacityDynamics, grid_size: int = 2001):
    """Stationary density and its normalization constant kappa.

    The inner integral is a cumulative trapezoid on the uniform grid and
    kappa is fixed by trapezoidal normalization, so the returned density
    integrates to one by construction.
    """
    grid = np.linspace(dyn.M_low, dyn.M_high, grid_size)
    phi = dyn.phi(grid)
    S2 = dyn.sigma_big(grid) ** 2
    inner = cumulative_trapezoid(2.0 * phi / S2, grid, initial=0.0)
    raw = np.exp(inner) / S2
    Z = np.trapezoid(raw, grid)
    return raw / Z, 1.0 / Z


@dataclass
class ErgodicReport:
    l1_distance: float          # L1(occupancy fractions, binned density)
    mean_gap: float             # |time-average M - stationary mean|
    mean_simulated: float
    mean_analytic: float
    total_time: float
    insufficient_samples: bool = False


def _bin_average(grid, density, edges, subdiv: int = 8):
    """Integral of the density over each histogram bin, so the analytic
    curve is compared with the same semantics as the occupancy counts."""
    f = PchipInterpolator(grid, density)
    probs = np.empty(edges.size - 1)
    for i in range(probs.size):
        xs = np.linspace(edges[i], edges[i + 1], subdiv + 1)
        probs[i] = np.trapezoid(f(xs), xs)
    return probs


def ergodic_check(dyn: CapacityDynamics, grid, density,
                  sim_cfg: SimulationConfig) -> ErgodicReport:
    """Monte Carlo occupancy versus the analytic stationary density.

    Runs the reflected simulation, bins the analytic density identically,
    and reports the L1 distance plus the gap in mean capacity.  Runs with
    fewer than 1000 retained steps are flagged instead of trusted.
    """
    res = simulate(dyn, sim_cfg)
    hist = res.histogram
    probs = _bin_average(grid, density, hist.edges)
    probs = probs / probs.sum()
    l1 = float(np.abs(hist.fractions - probs).sum())
    mean_analytic = float(np.trapezoid(grid * density, grid))
    gap = abs(res.mean_capacity - mean_analytic)
    kept_steps = hist.total_time / sim_cfg.dt
    return ErgodicReport(
        l1_distance=l1, mean_gap=gap,
        mean_simulated=res.mean_capacity, mean_analytic=mean_analytic,
        total_time=hist.total_time,
        insufficient_samples=kept_steps < 1000,
    )


def analyze_cycles(dyn: CapacityDynamics, grid_size: int = 2001) -> CycleAnalytics:
    """Durations and stationary density in one bundle."""
    grid = np.linspace(dyn.M_low, dyn.M_high, grid_size)
    Ts, Th = phase_durations(dyn, grid_size)
    density, kappa = stationary_density(dyn, grid_size)
    return CycleAnalytics(
        grid=grid, Ts=Ts, Th=Th,
        soft_duration=float(Ts[0]), hard_duration=float(Th[-1]),
        cycle_duration=float(Ts[0] + Th[-1]),
        density=density, kappa=kappa,
    )
