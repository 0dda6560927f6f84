"""Penalty-weighted backpressure controller (drift-plus-penalty).

Every slot, given the observed network state and the current actual and
virtual backlogs, the controller picks the action minimizing

    V * f(x(action)) + sum_l Z_l * g_l(x(action))
                     + sum_k Q_k * (y_k(action) - b_k(action))

over the finite action set of the current state.  The minimization is exact
(action sets are enumerated); the approximation slack C exists only so that
reported bounds stay comparable with analyses that allow inexact minimizers.
Decisions ignore backlog feasibility on purpose; the network transition
applies the clamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import capacity
from .network import Scenario, evaluate_action, network_step
from .processes import mixing_time, sample_path
from .queues import CompositeState
from .stability import TraceEnsemble, geometric_checkpoints

__all__ = [
    "DppConfig",
    "DriftConstants",
    "DppRunResult",
    "compile_tables",
    "dpp_score",
    "dpp_select_action",
    "run_dpp",
    "drift_constants",
]


@dataclass(frozen=True)
class DppConfig:
    """Controller parameters.

    ``v_weight`` trades cost against backlog; ``approximation_slack`` (C) is
    carried as metadata only -- the implementation always returns the exact
    argmin, which a finite action set always attains.  Ties break toward the
    lowest action index so runs are reproducible.
    """

    v_weight: float
    approximation_slack: float = 0.0
    tie_break: str = "lowest-index"
    mode: str = "respect"

    def __post_init__(self) -> None:
        if self.v_weight < 0 or self.approximation_slack < 0:
            raise ValueError("v_weight and approximation_slack must be >= 0")
        if self.tie_break != "lowest-index":
            raise ValueError("only the lowest-index tie rule is implemented")


@dataclass(frozen=True)
class OmegaTables:
    """Per-state action tables stacked for vectorized scoring."""

    f: np.ndarray        # (n_actions,)
    g: np.ndarray        # (n_actions, L)
    net: np.ndarray      # (n_actions, K), y_offered - b_offered
    y_table: np.ndarray  # (n_actions, K), exogenous table y only
    y_offered: np.ndarray
    b: np.ndarray        # (n_actions, K)
    x: np.ndarray        # (n_actions, M)


def compile_tables(scenario: Scenario) -> list[OmegaTables]:
    tables = []
    for w, acts in enumerate(scenario.actions):
        rows = [evaluate_action(scenario, w, i) for i in range(len(acts))]
        tables.append(
            OmegaTables(
                f=np.array([r[3] for r in rows]),
                g=np.array([r[4] for r in rows]).reshape(len(acts), -1),
                net=np.array([r[0] - r[1] for r in rows]),
                y_table=np.array([scenario.actions[w][i].y for i in range(len(acts))]),
                y_offered=np.array([r[0] for r in rows]),
                b=np.array([r[1] for r in rows]),
                x=np.array([r[2] for r in rows]).reshape(len(acts), -1),
            )
        )
    return tables


def dpp_score(
    scenario: Scenario,
    omega: int,
    action_index: int,
    state: CompositeState,
    v_weight: float,
) -> float:
    """Penalty-plus-weighted-differential score of one action."""
    y, b, _, f_value, g_values = evaluate_action(scenario, omega, action_index)
    return (
        v_weight * f_value
        + float(np.dot(state.virtuals, g_values))
        + float(np.dot(state.queues, y - b))
    )


def dpp_select_action(
    scenario: Scenario,
    omega: int,
    state: CompositeState,
    config: DppConfig,
    tables: Sequence[OmegaTables] | None = None,
) -> int:
    """Exact argmin of the score over the state's action list.

    ``np.argmin`` returns the first minimizer, which is the lowest-index tie
    rule.
    """
    tab = (tables or compile_tables(scenario))[omega]
    scores = config.v_weight * tab.f + tab.g @ state.virtuals + tab.net @ state.queues
    return int(np.argmin(scores))


@dataclass
class DppRunResult:
    """Closed-loop run output: per-slot records plus achieved time averages."""

    horizon: int
    q_path: np.ndarray       # (horizon + 1, K); slot-start backlogs
    z_path: np.ndarray       # (horizon + 1, L)
    omega_path: np.ndarray   # (horizon,)
    action_path: np.ndarray  # (horizon,)
    x_path: np.ndarray       # (horizon, M)
    f_path: np.ndarray       # (horizon,)
    g_path: np.ndarray       # (horizon, L)
    arrivals: np.ndarray     # (K, horizon)
    avg_cost: float = field(init=False)
    avg_g: np.ndarray = field(init=False)
    avg_backlog_sum: float = field(init=False)
    q_slopes: np.ndarray = field(init=False)
    z_slopes: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        t = self.horizon
        self.avg_cost = float(self.f_path.mean())
        self.avg_g = self.g_path.mean(axis=0)
        self.avg_backlog_sum = float(
            (self.q_path[:t].sum(axis=1) + self.z_path[:t].sum(axis=1)).mean()
        )
        self.q_slopes = self.q_path[t] / t
        self.z_slopes = self.z_path[t] / t

    def queue_ensemble(self, k: int) -> TraceEnsemble:
        return TraceEnsemble(backlog=self.q_path[: self.horizon, k][None, :])

    def total_backlog_ensemble(self) -> TraceEnsemble:
        total = self.q_path[: self.horizon].sum(axis=1) + self.z_path[
            : self.horizon
        ].sum(axis=1)
        return TraceEnsemble(backlog=total[None, :])


def run_dpp(
    scenario: Scenario,
    config: DppConfig,
    seed: int,
    horizon: int,
    replication: int = 0,
) -> DppRunResult:
    """Run the closed loop for one replication; deterministic per seed."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    k, n_l, m = scenario.n_queues, scenario.n_constraints, scenario.n_attributes
    omega_path, arrivals = sample_path(
        scenario.omega_chain, scenario.arrivals, seed, horizon, replication
    )
    tables = compile_tables(scenario)
    routing = scenario.routing
    clamped = config.mode == "clamped"

    q = np.zeros(k)
    z = np.zeros(n_l)
    q_path = np.zeros((horizon + 1, k))
    z_path = np.zeros((horizon + 1, n_l))
    action_path = np.zeros(horizon, dtype=np.int64)
    x_path = np.zeros((horizon, m))
    f_path = np.zeros(horizon)
    g_path = np.zeros((horizon, n_l))

    for t in range(horizon):
        w = int(omega_path[t])
        tab = tables[w]
        scores = config.v_weight * tab.f + tab.g @ z + tab.net @ q
        a_idx = int(np.argmin(scores))
        b_offered = tab.b[a_idx]
        # Same semantics as network_step, inlined for the hot loop.
        if clamped:
            q = np.maximum(q - b_offered, 0.0) + tab.y_offered[a_idx] + arrivals[:, t]
        else:
            b_actual = np.minimum(b_offered, q)
            y_actual = tab.y_table[a_idx].copy()
            for src, dst in routing:
                y_actual[dst] += b_actual[src]
            q = (q - b_actual) + y_actual + arrivals[:, t]
        z = np.maximum(z + tab.g[a_idx], 0.0)
        action_path[t] = a_idx
        x_path[t] = tab.x[a_idx]
        f_path[t] = tab.f[a_idx]
        g_path[t] = tab.g[a_idx]
        q_path[t + 1] = q
        z_path[t + 1] = z

    return DppRunResult(
        horizon=horizon,
        q_path=q_path,
        z_path=z_path,
        omega_path=omega_path,
        action_path=action_path,
        x_path=x_path,
        f_path=f_path,
        g_path=g_path,
        arrivals=arrivals,
    )


def replay_with_network_step(
    scenario: Scenario, config: DppConfig, seed: int, horizon: int, replication: int = 0
) -> DppRunResult:
    """Reference loop built on ``network_step``; must match ``run_dpp`` exactly.

    Kept for parity testing of the inlined hot loop.
    """
    k, n_l, m = scenario.n_queues, scenario.n_constraints, scenario.n_attributes
    omega_path, arrivals = sample_path(
        scenario.omega_chain, scenario.arrivals, seed, horizon, replication
    )
    tables = compile_tables(scenario)
    state = CompositeState.zeros(k, n_l)
    q_path = np.zeros((horizon + 1, k))
    z_path = np.zeros((horizon + 1, n_l))
    action_path = np.zeros(horizon, dtype=np.int64)
    x_path = np.zeros((horizon, m))
    f_path = np.zeros(horizon)
    g_path = np.zeros((horizon, n_l))
    for t in range(horizon):
        w = int(omega_path[t])
        a_idx = dpp_select_action(scenario, w, state, config, tables)
        state, record = network_step(
            scenario, state, w, a_idx, arrivals[:, t], mode=config.mode
        )
        action_path[t] = a_idx
        x_path[t] = record.x
        f_path[t] = record.f_value
        g_path[t] = record.g_values
        q_path[t + 1] = state.queues
        z_path[t + 1] = state.virtuals
    return DppRunResult(
        horizon=horizon,
        q_path=q_path,
        z_path=z_path,
        omega_path=omega_path,
        action_path=action_path,
        x_path=x_path,
        f_path=f_path,
        g_path=g_path,
        arrivals=arrivals,
    )


@dataclass(frozen=True)
class DriftConstants:
    """Diagnostic constants for the T-slot drift analysis.

    ``B`` bounds half the worst-case second moments of service and of
    arrivals-plus-transfers (plus constraint values squared); ``D`` bounds the
    cross terms accumulated over a frame; ``T`` is the chain's mixing time at
    total-variation gap ``d_max / 4``.  The runtime algorithm never uses these;
    they only feed the reported bounds.
    """

    B: float
    D: float
    T: int
    d_max: float


def drift_constants(scenario: Scenario, delta: float | None = None) -> DriftConstants:
    """Compute B, D from the tables and T from the chain's mixing time.

    Second moments take the worst action per state and average over the
    stationary distribution; arrival moments are analytic.  The default
    frame gap is ``d_max / 4``, which requires a strictly interior
    arrival-rate vector; passing ``delta`` explicitly lifts that requirement.
    """
    d_max = capacity.slater_dmax(scenario)
    if delta is None:
        if d_max <= 0:
            raise ValueError(
                "drift constants need d_max > 0 to set the frame gap; the "
                "arrival-rate vector is not interior to the capacity region "
                "(pass delta explicitly to override)"
            )
        delta = d_max / 4.0
    pi = scenario.stationary()
    lams = scenario.lambdas
    a2 = np.array([spec.second_moment() for spec in scenario.arrivals])

    b_total = 0.0
    d_total = 0.0
    for w in range(scenario.omega_chain.n_states):
        n_act = len(scenario.actions[w])
        rows = [evaluate_action(scenario, w, i) for i in range(n_act)]
        y = np.array([r[0] for r in rows])  # (n_act, K)
        b = np.array([r[1] for r in rows])
        g = np.array([r[4] for r in rows]).reshape(n_act, -1)
        # E[(a + y)^2 | action] with independent arrivals: E[a^2] + 2 lam y + y^2
        ay2 = a2[None, :] + 2.0 * lams[None, :] * y + y**2
        ayb2 = a2[None, :] + 2.0 * lams[None, :] * (y + b) + (y + b) ** 2
        b_total += pi[w] * (
            0.5 * np.max(b**2, axis=0).sum()
            + 0.5 * np.max(ay2, axis=0).sum()
            + np.max(g**2, axis=0).sum()
        )
        d_total += pi[w] * (
            np.max(ayb2, axis=0).sum() + np.max(g**2, axis=0).sum()
        )
    t_mix = mixing_time(scenario.omega_chain, delta).T
    return DriftConstants(B=float(b_total), D=float(d_total), T=t_mix, d_max=d_max)
