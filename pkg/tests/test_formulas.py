"""Pointwise closed-form operations: examples, oracles, and properties."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from inscycle import (
    LocalState,
    MarketParams,
    aggregate_investment,
    demand,
    equilibrium_demand,
    equilibrium_price,
    f_condition,
    g_coefficients,
    individual_policies,
    premium_rate,
    u_curvature,
    worst_case_generators,
)
from inscycle.errors import DegenerateSystem, NegativeReserves, VanishingDiffusion
from inscycle.formulas import equilibrium_point

BENCH = MarketParams()


def interior_state():
    return LocalState(M=1.0, u=1.1, du=-0.1)


def boundary_state(M=0.3240, u=1.2):
    return LocalState(M=M, u=u, du=0.0)


# --------------------------------------------------------------------- premium


def test_premium_fair_case():
    assert premium_rate(0.0, BENCH) == BENCH.l


def test_premium_at_full_loading():
    # p = alpha * eta with benchmark values
    assert premium_rate(BENCH.alpha * BENCH.eta, BENCH) == pytest.approx(
        1.0 + 0.28 * 0.56)


def test_premium_negative_loading():
    assert premium_rate(-0.1, BENCH) == pytest.approx(0.972)


# --------------------------------------------------------------------- demand


def test_demand_full_coverage_at_zero_price():
    assert demand(0.0, BENCH) == 1.0


def test_demand_root():
    assert demand(BENCH.alpha * BENCH.eta, BENCH) == pytest.approx(0.0)


def test_demand_midpoint():
    assert demand(0.28, BENCH) == pytest.approx(0.5)


# -------------------------------------------------------------- g-coefficients


def test_g_at_zero_risk_aversion():
    g1, g2 = g_coefficients(boundary_state(), BENCH)
    assert g1 == 1.0 and g2 == 0.0


def test_g2_proportional_to_rho():
    params = BENCH.with_(rho=0.0)
    _, g2 = g_coefficients(interior_state(), params)
    assert g2 == 0.0


def test_g_benchmark_point_against_substitution():
    # frozen from direct scalar substitution of the defining expressions
    g1, g2 = g_coefficients(interior_state(), BENCH)
    assert g1 == pytest.approx(1.1497520661157026, abs=1e-14)
    assert g2 == pytest.approx(-0.09256198347107437, abs=1e-14)


def test_degenerate_system_raises():
    # M R = 2 and theta/u = 1/2 drive g1 exactly to zero
    params = BENCH.with_(theta=0.5, rho=0.0)
    state = LocalState(M=2.0, u=1.0, du=-1.0)
    with pytest.raises(DegenerateSystem):
        g_coefficients(state, params)


# ------------------------------------------------------------------- price


def test_price_at_financing_boundary_formula():
    # independent evaluation with g1 = 1, g2 = 0
    state = boundary_state(M=0.3240, u=1.2)
    p = equilibrium_price(state, BENCH)
    A = state.M * BENCH.theta / state.u
    expected = (BENCH.eta - A * BENCH.rho * BENCH.q) / (1 / BENCH.alpha + A)
    assert p == pytest.approx(expected, abs=1e-14)


def test_price_uncorrelated_no_excess_return():
    params = BENCH.with_(rho=0.0, r=0.0, mu=0.0)
    state = interior_state()
    p = equilibrium_price(state, params)
    g1, _ = g_coefficients(state, params)
    A = state.M * params.theta / state.u
    assert p == pytest.approx(params.eta / (1 / params.alpha + A / g1),
                              rel=1e-12)


def test_price_limit_as_capacity_vanishes():
    state = LocalState(M=1e-12, u=1.1, du=-0.1)
    assert equilibrium_price(state, BENCH) == pytest.approx(
        BENCH.alpha * BENCH.eta, rel=1e-10)


def test_demand_limit_as_capacity_vanishes():
    state = LocalState(M=1e-12, u=1.1, du=-0.1)
    assert equilibrium_demand(state, BENCH) == pytest.approx(0.0, abs=1e-10)


def test_equilibrium_demand_composes():
    for state in (interior_state(), boundary_state()):
        D = equilibrium_demand(state, BENCH)
        assert D == pytest.approx(demand(equilibrium_price(state, BENCH),
                                         BENCH), abs=1e-10)


# ------------------------------------------------------------------ investment


def test_investment_zero_without_return_or_correlation():
    params = BENCH.with_(rho=0.0, r=0.0, mu=0.0)
    state = interior_state()
    p = equilibrium_price(state, params)
    assert aggregate_investment(state, p, params) == pytest.approx(0.0,
                                                                   abs=1e-14)


def test_investment_at_boundary_formula():
    state = boundary_state()
    p = equilibrium_price(state, BENCH)
    Y = aggregate_investment(state, p, BENCH)
    A = state.M * BENCH.theta / state.u
    assert Y == pytest.approx(A * (BENCH.q + BENCH.rho * p) / BENCH.sigma,
                              rel=1e-12)


def test_investment_large_theta_limit():
    # retains only the second-order theta terms of the clearing solution
    state = interior_state()
    errs = []
    for theta in (1e3, 1e4):
        params = BENCH.with_(theta=theta)
        p = equilibrium_price(state, params)
        Y = aggregate_investment(state, p, params)
        limit = (1 / (1 - params.rho**2)) * (params.q - params.rho * p) / (
            state.R * params.sigma)
        errs.append(abs(Y - limit) / abs(limit))
    assert errs[0] < 0.02
    assert errs[1] < errs[0] / 5  # first order in 1/theta


# ------------------------------------------------------------------ generators


def test_generators_at_boundary():
    state = boundary_state()
    pt = equilibrium_point(state, BENCH)
    hI, hS = worst_case_generators(state, pt["p"], pt["D"], pt["Y"], BENCH)
    assert hI == -pt["p"]
    assert hS == -BENCH.q


def test_generators_uncorrelated_no_investment():
    params = BENCH.with_(rho=0.0)
    state = interior_state()
    p = equilibrium_price(state, params)
    D = demand(p, params)
    hI, hS = worst_case_generators(state, p, D, 0.0, params)
    assert hI == pytest.approx(state.R * D * params.eta - p, abs=1e-14)
    assert hS == -params.q


def test_generator_identity_interior():
    state = interior_state()
    pt = equilibrium_point(state, BENCH)
    lhs = pt["p"] + pt["hI"]
    rhs = state.R * (pt["D"] * BENCH.eta + BENCH.rho * pt["Y"] * BENCH.sigma)
    assert lhs == pytest.approx(rhs, abs=1e-12)


# -------------------------------------------------------------------- policies


def test_policies_depleted_reserves():
    state = interior_state()
    assert individual_policies(0.0, state, 0.8, 1.2, BENCH) == (0.0, 0.0)


def test_policies_whole_industry():
    state = interior_state()
    x, y = individual_policies(state.M, state, 0.8, 1.2, BENCH)
    assert (x, y) == (0.8, 1.2)


def test_policies_half_industry():
    state = interior_state()
    x, y = individual_policies(state.M / 2, state, 0.8, 1.2, BENCH)
    assert (x, y) == (0.4, 0.6)


def test_policies_negative_reserves():
    with pytest.raises(NegativeReserves):
        individual_policies(-1.0, interior_state(), 0.8, 1.2, BENCH)


# ----------------------------------------------------------------- f condition


def test_f_at_boundary():
    state = boundary_state()
    pt = equilibrium_point(state, BENCH)
    f = f_condition(state, pt["p"], pt["D"], pt["Y"], BENCH)
    expected = (BENCH.theta / (state.u * BENCH.eta)) * (
        pt["p"] + BENCH.rho * BENCH.q)
    assert f == pytest.approx(expected, abs=1e-14)
    assert f > 0


def test_f_sign_agrees_with_equivalent_form():
    # the clearing algebra rewrites the positivity condition as
    # (1 + rho q/(alpha eta))(1 - M R) + (1 - rho q/(alpha eta))(1-rho^2) A R
    for M in (0.4, 0.8, 1.5, 2.0):
        for du in (-0.02, -0.1, -0.2):
            state = LocalState(M=M, u=1.1, du=du)
            pt = equilibrium_point(state, BENCH)
            f = f_condition(state, pt["p"], pt["D"], pt["Y"], BENCH)
            c = BENCH.rho * BENCH.q / (BENCH.alpha * BENCH.eta)
            A = M * BENCH.theta / state.u
            alt = ((1 + c) * (1 - M * state.R)
                   + (1 - c) * (1 - BENCH.rho**2) * A * state.R)
            assert np.sign(f) == np.sign(alt)


# ------------------------------------------------------------------- curvature


def test_curvature_reduction_against_substitution():
    params = BENCH.with_(rho=0.0, r=0.0, mu=0.0)
    state = LocalState(M=0.15, u=1.2, du=0.0)
    # independent scalar substitution: R = 0 kills every R term
    p = params.eta / (1 / params.alpha + state.M * params.theta / state.u)
    D = 1 - p / (params.alpha * params.eta)
    expected = (2 * state.u * (params.lam - params.theta / (2 * state.u) * p**2)
                / (D * params.eta) ** 2)
    assert u_curvature(state, params) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-15.635152019991677, rel=1e-12)


def test_curvature_benchmark_boundary_form():
    state = boundary_state()
    pt = equilibrium_point(state, BENCH)
    H = pt["p"] ** 2 + 2 * BENCH.rho * pt["p"] * BENCH.q + BENCH.q**2
    expected = 2 * state.u * (
        BENCH.lam - BENCH.r - BENCH.theta / (2 * state.u) * H) / pt["Sigma2"]
    assert u_curvature(state, BENCH) == pytest.approx(expected, rel=1e-12)


def test_curvature_vanishing_diffusion():
    # at M = 0 both underwriting and investment shut down
    params = BENCH.with_(rho=0.0, r=0.0, mu=0.0)
    state = LocalState(M=0.0, u=1.2, du=0.0)
    with pytest.raises(VanishingDiffusion):
        u_curvature(state, params)


# ---------------------------------------------------------- property tests

valid_states = st.builds(
    LocalState,
    M=st.floats(0.05, 5.0),
    u=st.floats(1.0, 1.2),
    du=st.floats(-0.3, 0.0),
)


@settings(max_examples=200, deadline=None)
@given(state=valid_states)
def test_property_composition_identity(state):
    assume(state.M * state.R < 0.99)
    D = equilibrium_demand(state, BENCH)
    assert D == pytest.approx(demand(equilibrium_price(state, BENCH), BENCH),
                              abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(state=valid_states,
       rho=st.floats(-0.6, 0.6))
def test_property_generator_identities(state, rho):
    params = BENCH.with_(rho=rho)
    assume(state.M * state.R < 0.99)
    pt = equilibrium_point(state, params)
    a = pt["D"] * params.eta
    b = pt["Y"] * params.sigma
    assert pt["p"] + pt["hI"] == pytest.approx(
        state.R * (a + rho * b), abs=1e-12)
    assert params.q + pt["hS"] == pytest.approx(
        state.R * (b + rho * a), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(state=valid_states, c=st.floats(0.0, 3.0))
def test_property_policy_homogeneity(state, c):
    m = 0.7 * state.M
    x1, y1 = individual_policies(m, state, 0.8, 1.2, BENCH)
    xc, yc = individual_policies(c * m, state, 0.8, 1.2, BENCH)
    assert xc == pytest.approx(c * x1, rel=1e-15, abs=1e-300)
    assert yc == pytest.approx(c * y1, rel=1e-15, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(M=st.floats(0.05, 5.0), u=st.floats(1.0, 1.2))
def test_property_boundary_degeneracy(M, u):
    state = LocalState(M=M, u=u, du=0.0)
    g1, g2 = g_coefficients(state, BENCH)
    assert (g1, g2) == (1.0, 0.0)
    pt = equilibrium_point(state, BENCH)
    hI, hS = worst_case_generators(state, pt["p"], pt["D"], pt["Y"], BENCH)
    assert hI == -pt["p"] and hS == -BENCH.q


@settings(max_examples=100, deadline=None)
@given(state=valid_states,
       weights=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8))
def test_property_market_clearing_partition(state, weights):
    # insurers holding a partition of M together underwrite exactly D*
    assume(state.M * state.R < 0.99)
    w = np.array(weights)
    parts = state.M * w / w.sum()
    D = equilibrium_demand(state, BENCH)
    Y = aggregate_investment(state, equilibrium_price(state, BENCH), BENCH)
    xs = [individual_policies(m, state, D, Y, BENCH)[0] for m in parts]
    assert np.sum(xs) == pytest.approx(D, abs=1e-12)
