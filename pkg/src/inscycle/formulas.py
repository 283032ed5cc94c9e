"""Closed-form pointwise quantities of the robust market equilibrium.

Everything here is evaluable from a :class:`LocalState` and
:class:`MarketParams` alone, without solving the free-boundary ODE.  All
functions broadcast over array-valued states, and all are parametrized in
(g1, g2, R) rather than raw (u, u') to stay well-conditioned where u' -> 0.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateSystem, NegativeReserves, VanishingDiffusion
from .params import LocalState, MarketParams

# |g1^2 - g2^2| below this is treated as a degenerate market-clearing system.
DEGENERACY_TOL = 1e-12
# Sigma^2 below this means underwriting and investment are both inactive.
DIFFUSION_TOL = 1e-14


def premium_rate(p, params: MarketParams):
    """Premium per unit time at loading factor p: fair part l plus the
    loading eta * p."""
    return params.l + params.eta * p

def demand(p, params: MarketParams):
    """Insuree coverage demand 1 - p / (alpha * eta).

    Deliberately not clamped to [0, 1]: negative loadings and D > 1 are
    admissible states of the model.
    """
    return 1.0 - p / (params.alpha * params.eta)


def g_coefficients(state: LocalState, params: MarketParams):
    """Market-clearing coefficients (g1, g2).

    g1 = 1 + (1 + rho^2) * M * (theta/u) * R - M * R
    g2 = 2 * rho * M * (theta/u) * R

    Raises DegenerateSystem when g1^2 - g2^2 is numerically zero, since
    every downstream quantity divides by it.
    """
    R = state.R
    A = state.M * params.theta / state.u
    g1 = 1.0 + (1.0 + params.rho**2) * A * R - state.M * R
    g2 = 2.0 * params.rho * A * R
    if np.any(np.abs(g1 * g1 - g2 * g2) < DEGENERACY_TOL):
        raise DegenerateSystem(
            "g1^2 - g2^2 is numerically zero: market-clearing system is "
            "degenerate (equilibrium-validity failure)"
        )
    return g1, g2


def equilibrium_price(state: LocalState, params: MarketParams):
    """Equilibrium loading factor p*(M).

    The sign is unrestricted; negative prices arise for sufficiently
    positive correlation.
    """
    g1, g2 = g_coefficients(state, params)
    A = state.M * params.theta / state.u
    det = g1 * g1 - g2 * g2
    q = params.q
    num = params.eta - (A / det) * (params.rho * g1 - g2) * q
    den = 1.0 / params.alpha + (A / det) * (g1 - params.rho * g2)
    return num / den


def equilibrium_demand(state: LocalState, params: MarketParams):
    """Equilibrium coverage D(p*(M)), written directly in (g1, g2)."""
    g1, g2 = g_coefficients(state, params)
    A = state.M * params.theta / state.u
    det = g1 * g1 - g2 * g2
    q = params.q
    num = (A / det) * (
        g1 - params.rho * g2
        + (params.rho * g1 - g2) * q / (params.alpha * params.eta)
    )
    den = 1.0 / params.alpha + (A / det) * (g1 - params.rho * g2)
    return num / den


def aggregate_investment(state: LocalState, p_star, params: MarketParams):
    """Aggregate risky-asset position Y*(M) clearing the investment
    first-order conditions at price p*."""
    g1, g2 = g_coefficients(state, params)
    A = state.M * params.theta / state.u
    det = g1 * g1 - g2 * g2
    q = params.q
    return (A / (params.sigma * det)) * (
        g1 * (q + params.rho * p_star) - g2 * (p_star + params.rho * q)
    )


def worst_case_generators(state: LocalState, p_star, D_star, Y_star,
                          params: MarketParams):
    """Worst-case density generator pair (hI, hS).

    hI = R * (D eta + rho Y sigma) - p*
    hS = R * (Y sigma + rho D eta) - q

    Sign violations of eta*(p* + hI) >= 0 or sigma*(q + hS) >= 0 indicate
    an invalid equilibrium; they are left to the assumption checker rather
    than raised here, because non-converged solver iterates hit them
    transiently.
    """
    R = state.R
    hI = R * (D_star * params.eta + params.rho * Y_star * params.sigma) - p_star
    hS = R * (Y_star * params.sigma + params.rho * D_star * params.eta) - params.q
    return hI, hS


def individual_policies(m, state: LocalState, D_star, Y_star,
                        params: MarketParams):
    """Optimal (underwriting, investment) of an insurer holding reserves m.

    Policies are proportional: (m/M) * (D*, Y*); an insurer with depleted
    reserves does neither.
    """
    if np.any(np.asarray(m) < 0):
        raise NegativeReserves(f"individual reserves must be >= 0, got {m}")
    scale = np.asarray(m) / state.M
    x = scale * D_star
    y = scale * Y_star
    if np.ndim(m) == 0:
        return float(x), float(y)
    return x, y


def f_condition(state: LocalState, p_star, D_star, Y_star,
                params: MarketParams):
    """Interior-regime certificate f(M).

    f(M) = (theta/(u eta)) [p* + rho q - R (1+rho^2) D eta - 2 R rho Y sigma]
           + R D.

    A positive value certifies that the non-negativity constraint on
    underwriting is slack, i.e. the interior solution is the optimum.
    """
    R = state.R
    bracket = (
        p_star + params.rho * params.q
        - R * (1.0 + params.rho**2) * D_star * params.eta
        - 2.0 * R * params.rho * Y_star * params.sigma
    )
    return (params.theta / (state.u * params.eta)) * bracket + R * D_star


def diffusion_squared(D_star, Y_star, params: MarketParams):
    """Squared volatility of the capacity diffusion:
    (D eta)^2 + 2 rho (D eta)(Y sigma) + (Y sigma)^2."""
    a = D_star * params.eta
    b = Y_star * params.sigma
    return a * a + 2.0 * params.rho * a * b + b * b


def equilibrium_point(state: LocalState, params: MarketParams):
    """All pointwise equilibrium quantities at once.

    Returns a dict with keys p, D, Y, hI, hS, Sigma2, f.  This is the
    single evaluation path shared by the ODE right-hand side, the grid
    population after solving, and the capacity-dynamics builder.
    """
    p = equilibrium_price(state, params)
    D = demand(p, params)
    Y = aggregate_investment(state, p, params)
    hI, hS = worst_case_generators(state, p, D, Y, params)
    return {
        "p": p,
        "D": D,
        "Y": Y,
        "hI": hI,
        "hS": hS,
        "Sigma2": diffusion_squared(D, Y, params),
        "f": f_condition(state, p, D, Y, params),
    }


def u_curvature(state: LocalState, params: MarketParams):
    """Second derivative u''(M) solved explicitly from the equilibrium ODE.

    With H = hI^2 + 2 rho hI hS + hS^2 and Sigma^2 the capacity diffusion:

        u'' = 2 u [ (lam - r - (theta/(2u)) H + M r R) / Sigma^2 + R^2 ]

    Raises VanishingDiffusion when Sigma^2 is numerically zero.
    """
    pt = equilibrium_point(state, params)
    S2 = pt["Sigma2"]
    if np.any(np.asarray(S2) < DIFFUSION_TOL):
        raise VanishingDiffusion(
            "capacity diffusion Sigma^2 is numerically zero: underwriting "
            "and investment are simultaneously inactive"
        )
    hI, hS = pt["hI"], pt["hS"]
    H = hI * hI + 2.0 * params.rho * hI * hS + hS * hS
    R = state.R
    return 2.0 * state.u * (
        (params.lam - params.r - params.theta / (2.0 * state.u) * H
         + state.M * params.r * R) / S2
        + R * R
    )
