"""Reflected capacity diffusion under the worst-case measure.

The solved equilibrium induces an SDE for aggregate capacity on
[M_low, M_high]:

    dM = Phi(M) dt + Sigma(M) dW,    Phi = M r + R Sigma^2,
    Sigma^2 = (D eta)^2 + 2 rho (D eta)(Y sigma) + (Y sigma)^2,

with reflection at both barriers (dividends above, recapitalization
below).  The two underlying shocks are already aggregated into the single
Brownian motion W, so each Euler-Maruyama step draws one normal variate.
Paths are advanced by a compiled kernel fed with chunked normals from a
per-path PCG64 stream, which keeps long-horizon ergodic runs cheap while
preserving splittable-seed reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.interpolate import PchipInterpolator

from .errors import InvalidSolution
from .solver import EquilibriumSolution

__all__ = [
    "CapacityDynamics",
    "SimulationConfig",
    "OccupancyHistogram",
    "SimulationResult",
    "build_dynamics",
    "simulate",
    "first_passage_times",
]

_IDENTITY_TOL = 1e-10
_NORMAL_CHUNK = 2_000_000


@dataclass
class CapacityDynamics:
    """Tabulated drift and volatility of the capacity diffusion.

    phi and sigma_big are monotone-cubic interpolants evaluable anywhere
    on [M_low, M_high]; the aligned arrays phi_grid / sigma_grid hold
    their values on the source solution's grid.  phi_ref_grid is the
    pre-distortion (reference-measure) drift.
    """

    source: EquilibriumSolution
    phi: PchipInterpolator
    sigma_big: PchipInterpolator
    phi_grid: np.ndarray
    sigma_grid: np.ndarray
    phi_ref_grid: np.ndarray

    @property
    def M_low(self) -> float:
        return self.source.M_low

    @property
    def M_high(self) -> float:
        return self.source.M_high

    def tables(self, n: int = 4001, measure: str = "worst_case"):
        """Uniform lookup tables (grid, phi, sigma) for the step kernel."""
        g = np.linspace(self.M_low, self.M_high, n)
        sig = self.sigma_big(g)
        if measure == "worst_case":
            phi = self.phi(g)
        elif measure == "reference":
            phi = PchipInterpolator(self.source.grid, self.phi_ref_grid)(g)
        else:
            raise ValueError(f"unknown measure {measure!r}")
        return g, phi, sig


def build_dynamics(sol: EquilibriumSolution) -> CapacityDynamics:
    """Tabulate Phi and Sigma on the solution grid.

    Both lines of the drift identity are evaluated and cross-checked:
    Phi = M r + R Sigma^2 must equal the direct form
    D eta (p* + hI) + Y sigma (q + hS) + M r pointwise.
    """
    p = sol.params
    a = sol.D_star * p.eta
    b = sol.Y_star * p.sigma
    S2 = a * a + 2.0 * p.rho * a * b + b * b
    if np.any(S2 <= 0.0):
        raise InvalidSolution(
            "Sigma^2 <= 0 on the grid: capacity diffusion is degenerate"
        )
    R = sol.state().R
    phi = sol.grid * p.r + R * S2
    phi_direct = (a * (sol.p_star + sol.hI) + b * (p.q + sol.hS)
                  + sol.grid * p.r)
    gap = np.max(np.abs(phi - phi_direct))
    if gap > _IDENTITY_TOL:
        raise InvalidSolution(
            f"drift identity Phi = M r + R Sigma^2 violated by {gap:.3e}"
        )
    phi_ref = a * sol.p_star + b * p.q + sol.grid * p.r
    return CapacityDynamics(
        source=sol,
        phi=PchipInterpolator(sol.grid, phi),
        sigma_big=PchipInterpolator(sol.grid, np.sqrt(S2)),
        phi_grid=phi,
        sigma_grid=np.sqrt(S2),
        phi_ref_grid=phi_ref,
    )


@dataclass(frozen=True)
class SimulationConfig:
    """Euler-Maruyama run settings.

    M0 = None starts at the midpoint of the barriers; occupancy statistics
    discard the first burn_in fraction of each path.
    """

    horizon: float = 1e5
    dt: float = 1e-3
    M0: float | None = None
    seed: int = 0
    paths: int = 1
    bins: int = 200
    measure: str = "worst_case"
    burn_in: float = 0.01

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.horizon < self.dt:
            raise ValueError("horizon must be >= dt")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.measure not in ("worst_case", "reference"):
            raise ValueError(f"unknown measure {self.measure!r}")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in must lie in [0, 1)")


@dataclass
class OccupancyHistogram:
    """Fraction of (post-burn-in) time spent in each capacity bin."""

    edges: np.ndarray
    fractions: np.ndarray
    total_time: float

    def __post_init__(self):
        s = float(self.fractions.sum())
        if abs(s - 1.0) > 1e-12 or np.any(self.fractions < 0):
            raise InvalidSolution(
                f"occupancy fractions must be a probability vector, sum={s}"
            )


@dataclass
class SimulationResult:
    histogram: OccupancyHistogram
    mean_capacity: float           # time average over post-burn-in steps
    paths: list = field(default_factory=list)  # (t, M) pairs when recorded


@njit(cache=True)
def _em_steps(M, z, phi, sig, M_low, M_high, inv_h, n_tab, dt, sdt,
              counts, inv_hb, nbins, k0, burn, msum, stride, rec, rec_pos):
    """Advance one path through len(z) steps.

    Accumulates occupancy counts and the running capacity sum for steps
    past the burn-in; with stride > 0 additionally writes every stride-th
    state into rec.
    """
    for k in range(z.shape[0]):
        x = (M - M_low) * inv_h
        i = int(x)
        if i > n_tab - 2:
            i = n_tab - 2
        w = x - i
        ph = phi[i] * (1.0 - w) + phi[i + 1] * w
        sg = sig[i] * (1.0 - w) + sig[i + 1] * w
        M = M + ph * dt + sg * sdt * z[k]
        if M < M_low:
            M = M_low
        elif M > M_high:
            M = M_high
        if k0 + k >= burn:
            j = int((M - M_low) * inv_hb)
            if j > nbins - 1:
                j = nbins - 1
            counts[j] += 1.0
            msum += M
        if stride > 0 and (k0 + k + 1) % stride == 0 and rec_pos < rec.shape[0]:
            rec[rec_pos] = M
            rec_pos += 1
    return M, msum, rec_pos


@njit(cache=True)
def _em_first_hit(M, z, phi, sig, M_low, M_high, inv_h, n_tab, dt, sdt,
                  reflect_low, target_high):
    """Steps until the target barrier is reached; the other barrier
    reflects.  Returns (steps consumed, hit flag, final M)."""
    for k in range(z.shape[0]):
        x = (M - M_low) * inv_h
        i = int(x)
        if i > n_tab - 2:
            i = n_tab - 2
        w = x - i
        ph = phi[i] * (1.0 - w) + phi[i + 1] * w
        sg = sig[i] * (1.0 - w) + sig[i + 1] * w
        M = M + ph * dt + sg * sdt * z[k]
        if M <= M_low:
            if not target_high:
                return k + 1, True, M_low
            if reflect_low:
                M = M_low
        if M >= M_high:
            if target_high:
                return k + 1, True, M_high
            M = M_high
    return z.shape[0], False, M


def _path_streams(seed, n_paths):
    """Independent per-path generators derived from one master seed, so a
    path is identical whether run alone or inside an ensemble."""
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(n_paths)]


def simulate(dyn: CapacityDynamics, cfg: SimulationConfig,
             record_stride: int = 0, table_size: int = 4001) -> SimulationResult:
    """Run the reflected Euler-Maruyama scheme.

    Every sampled point is clamped to [M_low, M_high] (projection
    reflection).  With record_stride > 0, every stride-th state of each
    path is kept as a (t, M) pair in the result.
    """
    grid, phi, sig = dyn.tables(table_size, cfg.measure)
    M_low, M_high = dyn.M_low, dyn.M_high
    inv_h = (table_size - 1) / (M_high - M_low)
    steps = int(round(cfg.horizon / cfg.dt))
    burn = int(cfg.burn_in * steps)
    if burn >= steps:
        burn = steps - 1
    M0 = 0.5 * (M_low + M_high) if cfg.M0 is None else float(cfg.M0)
    if not M_low <= M0 <= M_high:
        raise ValueError(f"M0 = {M0} outside [{M_low}, {M_high}]")
    sdt = np.sqrt(cfg.dt)
    inv_hb = cfg.bins / (M_high - M_low)

    counts = np.zeros(cfg.bins)
    msum = 0.0
    paths_out = []
    for rng in _path_streams(cfg.seed, cfg.paths):
        M = M0
        done = 0
        pos = 0
        rec = np.empty(steps // record_stride if record_stride > 0 else 0)
        while done < steps:
            z = rng.standard_normal(min(_NORMAL_CHUNK, steps - done))
            M, msum, pos = _em_steps(M, z, phi, sig, M_low, M_high, inv_h,
                                     table_size, cfg.dt, sdt, counts, inv_hb,
                                     cfg.bins, done, burn, msum,
                                     record_stride, rec, pos)
            done += z.size
        if record_stride > 0:
            t = cfg.dt * record_stride * np.arange(1, pos + 1)
            paths_out.append((t, rec[:pos]))

    kept = cfg.paths * (steps - burn)
    fractions = counts / counts.sum()
    edges = np.linspace(M_low, M_high, cfg.bins + 1)
    hist = OccupancyHistogram(edges=edges, fractions=fractions,
                              total_time=kept * cfg.dt)
    return SimulationResult(histogram=hist, mean_capacity=msum / kept,
                            paths=paths_out)


def first_passage_times(dyn: CapacityDynamics, n_paths: int,
                        dt: float = 1e-3, seed: int = 0,
                        start: str = "low", target: str = "high",
                        max_time: float = 1e4,
                        table_size: int = 4001) -> np.ndarray:
    """Monte Carlo first-passage times between the barriers.

    start/target pick the barrier pair; the non-target barrier reflects.
    Paths that do not hit within max_time are truncated at max_time.
    """
    grid, phi, sig = dyn.tables(table_size, "worst_case")
    M_low, M_high = dyn.M_low, dyn.M_high
    inv_h = (table_size - 1) / (M_high - M_low)
    sdt = np.sqrt(dt)
    target_high = target == "high"
    max_steps = int(max_time / dt)
    chunk = 1 << 16

    times = np.empty(n_paths)
    for ipath, rng in enumerate(_path_streams(seed, n_paths)):
        M = M_low if start == "low" else M_high
        steps = 0
        while steps < max_steps:
            z = rng.standard_normal(min(chunk, max_steps - steps))
            used, hit, M = _em_first_hit(M, z, phi, sig, M_low, M_high,
                                         inv_h, table_size, dt, sdt,
                                         True, target_high)
            steps += used
            if hit:
                break
        times[ipath] = steps * dt
    return times
