import numpy as np
import pytest

from oracles import grid_fopt
from qnetlab.capacity import (
    build_lp,
    lambda_in_capacity,
    performance_bounds,
    policy_constraint_violation,
    slater_dmax,
    solve_fopt,
)
from qnetlab.controller import DriftConstants
from qnetlab.network import load_scenario
from qnetlab.processes import make_rng


@pytest.fixture(scope="module")
def bb1():
    return load_scenario("bb1.json")


@pytest.fixture(scope="module")
def downlink2():
    return load_scenario("downlink2.json")


# ---------------------------------------------------------------------------
# LP structure
# ---------------------------------------------------------------------------


def test_lp_variable_count_matches_action_tables(bb1, downlink2):
    assert build_lp(bb1).n_vars == 2  # one action in each of two states
    assert build_lp(downlink2).n_vars == 5  # 1 + 2 + 2


def test_single_state_single_action_is_forced(bb1):
    report = solve_fopt(bb1)
    assert report.feasible
    for dist in report.policy.distributions:
        assert dist == pytest.approx([1.0])


# ---------------------------------------------------------------------------
# optimal values (hand oracles)
# ---------------------------------------------------------------------------


def test_bb1_fopt_is_forced_service_effort(bb1):
    # Single action per state: expected effort = P(ON) = 0.5 regardless of
    # lambda, as long as lambda is supportable.
    report = solve_fopt(bb1)
    assert report.f_opt == pytest.approx(0.5, abs=1e-9)


def test_downlink_fopt_equals_total_arrival_rate(downlink2):
    # Power is spent only while serving, service is one unit per served slot,
    # and the power budget is slack at the optimum, so minimal average power
    # equals the total arrival rate.
    report = solve_fopt(downlink2)
    assert report.feasible
    assert report.f_opt == pytest.approx(0.3, abs=1e-9)
    assert report.d_max == pytest.approx(0.1, abs=1e-9)
    assert set(report.binding_constraints) == {"queue[0]", "queue[1]"}
    # Optimal serve probability at an ON state: 0.15 / (4/11).
    on_off = downlink2.omega_chain.labels.index("ON-OFF")
    serve_prob = report.policy.distributions[on_off][1]
    assert serve_prob == pytest.approx(0.15 * 11 / 4, abs=1e-9)


def test_returned_policy_satisfies_lp_constraints(downlink2):
    report = solve_fopt(downlink2)
    lp = build_lp(downlink2)
    assert policy_constraint_violation(lp, report.policy) <= 1e-9


def test_bb1_dmax_hand_value(bb1):
    # Margin LP: 0.3 + d/2 <= 0.5  ->  d = 0.4.
    assert slater_dmax(bb1) == pytest.approx(0.4, abs=1e-9)


def test_infeasible_rate_vector_reported(bb1):
    report = solve_fopt(bb1, lambdas=[0.6])
    assert not report.feasible
    assert report.d_max == 0.0
    assert report.policy is None


def test_two_action_minimum_picks_smaller_cost():
    # Single state, actions with x in {1, 2}, cost f(x) = x, no constraints.
    from qnetlab.network import Action, AffineFunction, Scenario
    from qnetlab.processes import ArrivalSpec, FiniteMarkovChain

    s = Scenario(
        name="pick-smaller",
        n_queues=1,
        n_constraints=0,
        n_attributes=1,
        omega_chain=FiniteMarkovChain(np.array([[1.0]]), np.array([1.0])),
        actions=[
            [
                Action("one", y=np.zeros(1), b=np.ones(1), x=np.array([1.0])),
                Action("two", y=np.zeros(1), b=np.ones(1), x=np.array([2.0])),
            ]
        ],
        cost=AffineFunction(0.0, np.array([1.0])),
        constraints=[],
        arrivals=[ArrivalSpec(kind="bernoulli", rate=0.5, p=0.5)],
    )
    report = solve_fopt(s)
    assert report.f_opt == pytest.approx(1.0, abs=1e-9)
    assert report.policy.distributions[0] == pytest.approx([1.0, 0.0])


def test_zero_rates_with_idle_action_are_strictly_interior(downlink2):
    assert slater_dmax(downlink2, lambdas=[0.0, 0.0]) > 0.0


# ---------------------------------------------------------------------------
# capacity membership
# ---------------------------------------------------------------------------


def test_membership_includes_boundary(bb1):
    assert lambda_in_capacity(bb1, [0.5])
    assert not lambda_in_capacity(bb1, [0.51])
    assert lambda_in_capacity(bb1, [0.0])


def test_boundary_point_has_zero_margin(bb1):
    assert slater_dmax(bb1, lambdas=[0.5]) == pytest.approx(0.0, abs=1e-9)


def test_membership_is_monotone_downward(downlink2):
    rng = make_rng(31, 0)
    for _ in range(25):
        lam = rng.random(2) * 0.5
        if lambda_in_capacity(downlink2, lam):
            smaller = lam * rng.random(2)
            assert lambda_in_capacity(downlink2, smaller)


def test_slater_consistency(downlink2):
    d = slater_dmax(downlink2)
    assert d > 0
    assert lambda_in_capacity(downlink2, downlink2.lambdas)
    # The margin-d policy pushes every inequality to -d/2, so shifting every
    # arrival rate up by d/2 keeps the vector inside the region.
    shifted = downlink2.lambdas + d / 2.0
    assert lambda_in_capacity(downlink2, shifted)
    beyond = downlink2.lambdas + d + 0.05
    assert not lambda_in_capacity(downlink2, beyond)


# ---------------------------------------------------------------------------
# grid-search oracle
# ---------------------------------------------------------------------------


def test_fopt_matches_grid_oracle(bb1, downlink2):
    for scenario in (bb1, downlink2):
        report = solve_fopt(scenario)
        grid_value = grid_fopt(scenario, step=1e-3)
        assert abs(report.f_opt - grid_value) <= 1e-3 * (1.0 + abs(report.f_opt))


def test_fopt_matches_grid_oracle_with_lambda_override(downlink2):
    report = solve_fopt(downlink2, lambdas=[0.25, 0.1])
    grid_value = grid_fopt(downlink2, lambdas=np.array([0.25, 0.1]), step=1e-3)
    assert report.feasible
    assert abs(report.f_opt - grid_value) <= 1e-3 * (1.0 + abs(report.f_opt))


# ---------------------------------------------------------------------------
# performance bounds
# ---------------------------------------------------------------------------


def test_c0_formula(bb1):
    # f_max = 1, d_max = 0.4 -> c_0 = 4 * 1 / 0.4 + 1 = 11.
    drift = DriftConstants(B=1.0, D=1.0, T=1, d_max=0.4)
    bounds = performance_bounds(bb1, v_param=10.0, epsilon=0.1, drift=drift)
    assert bounds.c_0 == pytest.approx(11.0)


def test_backlog_bound_arithmetic(bb1):
    drift = DriftConstants(B=2.0, D=3.0, T=1, d_max=0.4)
    bounds = performance_bounds(bb1, v_param=10.0, epsilon=0.1, drift=drift)
    # (C + T B + (T-1) D + V (f_max - f_min)) / (d_max / 4) with C=0:
    assert bounds.backlog_bound == pytest.approx((2.0 + 10.0 * 1.0) / 0.1)
    assert bounds.T_eps == 1  # i.i.d. server chain mixes in one step


def test_epsilon_range_is_enforced(bb1):
    drift = DriftConstants(B=1.0, D=1.0, T=1, d_max=0.4)
    with pytest.raises(ValueError, match="epsilon"):
        performance_bounds(bb1, v_param=1.0, epsilon=0.2, drift=drift)
    with pytest.raises(ValueError, match="epsilon"):
        performance_bounds(bb1, v_param=1.0, epsilon=0.0, drift=drift)


def test_bounds_require_interior_point(bb1):
    drift = DriftConstants(B=1.0, D=1.0, T=1, d_max=0.0)
    with pytest.raises(ValueError, match="interior"):
        performance_bounds(bb1, v_param=1.0, epsilon=0.01, drift=drift)
