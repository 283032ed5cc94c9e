"""Robust equilibrium of a competitive insurance market with financial
investment: free-boundary solver for the market-to-book ratio, reflected
capacity diffusion, and underwriting-cycle analytics."""

from .params import MarketParams, LocalState
from .formulas import (
    premium_rate,
    demand,
    g_coefficients,
    equilibrium_price,
    equilibrium_demand,
    aggregate_investment,
    worst_case_generators,
    individual_policies,
    f_condition,
    u_curvature,
)
from .solver import (
    SolverConfig,
    EquilibriumSolution,
    solve_equilibrium,
    check_assumptions,
    sweep,
    save_solution,
    load_solution,
)
from .dynamics import (
    CapacityDynamics,
    SimulationConfig,
    OccupancyHistogram,
    build_dynamics,
    simulate,
    first_passage_times,
)
from .cycles import (
    CycleAnalytics,
    phase_durations,
    stationary_density,
    ergodic_check,
    analyze_cycles,
)
from . import errors

__version__ = "0.1.0"
