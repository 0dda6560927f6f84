"""Command-line orchestration: scenario loading, replication fan-out, V-sweeps,
report/CSV emission, and counter-example regression.

Every command is a pure function of (scenario file, flags, seed): re-running
with the same inputs writes byte-identical outputs.  Reports are flat
``key=value`` text; traces and curves are CSV with fixed column order.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import capacity as capacity_mod
from . import controller, stability
from .network import Scenario, ScenarioError, load_scenario
from .processes import ArrivalSpec, FiniteMarkovChain, sample_path
from .stability import (
    BB1Params,
    StabilityVerdict,
    VerdictThresholds,
    bb1_closed_form,
    curve_rows,
    estimate_verdict_streaming,
    single_queue_path,
    verdict_report_items,
)

DEFAULT_SEED = 12345
COUNTEREXAMPLES = ("rate-not-mean", "mean-not-rate", "strong-not-rate")


# ---------------------------------------------------------------------------
# formatting helpers
# ---------------------------------------------------------------------------


def _fmt(value: object) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "n/a"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def write_report(path: Path, items: Iterable[tuple[str, object]]) -> None:
    lines = [f"{key}={_fmt(value)}\n" for key, value in items]
    path.write_text("".join(lines))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _echo(*parts: object) -> None:
    print(" ".join(str(p) for p in parts))


# ---------------------------------------------------------------------------
# scenario overrides
# ---------------------------------------------------------------------------


def parse_lambda_flag(raw: str, k: int) -> list[float]:
    values = [float(v) for v in raw.split(",")]
    if len(values) == 1 and k > 1:
        values = values * k
    if len(values) != k:
        raise ValueError(f"--lambda needs 1 or {k} comma-separated values")
    if any(v < 0 for v in values):
        raise ValueError("--lambda entries must be non-negative")
    return values


def override_lambdas(scenario: Scenario, lams: Sequence[float]) -> Scenario:
    """Replace every arrival process with Bernoulli(lambda_k) unit arrivals."""
    arrivals = [
        ArrivalSpec(kind="bernoulli", rate=lam, p=lam, size=1.0) for lam in lams
    ]
    return replace(scenario, arrivals=arrivals)


def override_mu(scenario: Scenario, mu: float) -> Scenario:
    """Reparameterize a two-state i.i.d. server chain to ON-probability mu.

    Only meaningful for scenarios shaped like the ``bb1`` fixture (two states
    whose rows are identical and whose tables differ only via the ON state).
    """
    chain = scenario.omega_chain
    if chain.n_states != 2 or not np.allclose(chain.transition[0], chain.transition[1]):
        raise ScenarioError(
            "omega_chain", "--mu requires a two-state i.i.d. server chain (bb1 shape)"
        )
    if not (0.0 <= mu <= 1.0):
        raise ValueError("--mu must lie in [0, 1]")
    row = np.array([1.0 - mu, mu])
    new_chain = FiniteMarkovChain(
        transition=np.vstack([row, row]), initial=row.copy(), labels=chain.labels
    )
    return replace(scenario, omega_chain=new_chain)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


def is_uncontrolled_single_queue(scenario: Scenario) -> bool:
    """True when the scenario is a single queue with no decisions to make:
    one action per state, no constraints, no routing, no transfers, and an
    i.i.d. state chain.  Such runs use the vectorized path generator."""
    if scenario.n_queues != 1 or scenario.n_constraints != 0 or scenario.routing:
        return False
    if any(len(acts) != 1 for acts in scenario.actions):
        return False
    if any(np.any(acts[0].y != 0.0) for acts in scenario.actions):
        return False
    p = scenario.omega_chain.transition
    return bool(np.all(p == p[0]))


def fast_single_queue_run(
    scenario: Scenario, seed: int, horizon: int, replication: int
) -> controller.DppRunResult:
    """Vectorized equivalent of ``run_dpp`` for uncontrolled single queues."""
    omega_path, arrivals = sample_path(
        scenario.omega_chain, scenario.arrivals, seed, horizon, replication
    )
    tables = controller.compile_tables(scenario)
    b_by_state = np.array([tab.b[0, 0] for tab in tables])
    x_by_state = np.stack([tab.x[0] for tab in tables])
    f_by_state = np.array([tab.f[0] for tab in tables])
    services = b_by_state[omega_path]
    q = single_queue_path(arrivals[0], services)
    return controller.DppRunResult(
        horizon=horizon,
        q_path=q[:, None],
        z_path=np.zeros((horizon + 1, 0)),
        omega_path=omega_path,
        action_path=np.zeros(horizon, dtype=np.int64),
        x_path=x_by_state[omega_path],
        f_path=f_by_state[omega_path],
        g_path=np.zeros((horizon, 0)),
        arrivals=arrivals,
    )


def _dpp_rep(args: tuple[Scenario, controller.DppConfig, int, int, int]):
    scenario, config, seed, horizon, rep = args
    return controller.run_dpp(scenario, config, seed, horizon, replication=rep)


def run_replications(
    scenario: Scenario,
    config: controller.DppConfig,
    seed: int,
    horizon: int,
    n_reps: int,
    workers: int = 1,
) -> list[controller.DppRunResult]:
    """Run replications on isolated substreams; results collected in order."""
    jobs = [(scenario, config, seed, horizon, r) for r in range(n_reps)]
    if workers <= 1 or n_reps == 1:
        return [_dpp_rep(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_dpp_rep, jobs))


def _dpp_total_path(args: tuple[Scenario, controller.DppConfig, int, int, int]):
    run = _dpp_rep(args)
    total = run.q_path[: run.horizon].sum(axis=1)
    return total, (run if args[4] == 0 else None)


def collect_total_backlogs(
    scenario: Scenario,
    config: controller.DppConfig,
    seed: int,
    horizon: int,
    n_reps: int,
    workers: int = 1,
) -> tuple[list[np.ndarray], controller.DppRunResult]:
    """Total actual-backlog path per replication, plus replication 0 in full.

    Keeps memory at one path per replication instead of one full run record.
    """
    jobs = [(scenario, config, seed, horizon, r) for r in range(n_reps)]
    if workers <= 1 or n_reps == 1:
        results = [_dpp_total_path(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_dpp_total_path, jobs))
    totals = [total for total, _ in results]
    first_run = results[0][1]
    assert first_run is not None
    return totals, first_run


def _verdict_for_runs(
    runs_factory, n_reps: int, horizon: int, thresholds: VerdictThresholds
) -> StabilityVerdict:
    estimators = list(stability.ALL_ESTIMATORS)
    if n_reps < thresholds.min_reps_mean_rate:
        estimators.remove("mean_rate")
    return estimate_verdict_streaming(
        runs_factory,
        n_reps=n_reps,
        horizon=horizon,
        thresholds=thresholds,
        estimators=estimators,
    )


# ---------------------------------------------------------------------------
# trace CSV
# ---------------------------------------------------------------------------


def trace_header(scenario: Scenario) -> list[str]:
    cols = ["t"]
    cols += [f"Q_{k + 1}" for k in range(scenario.n_queues)]
    cols += [f"Z_{l + 1}" for l in range(scenario.n_constraints)]
    cols += ["omega", "action"]
    cols += [f"x_{m + 1}" for m in range(scenario.n_attributes)]
    cols += ["f"]
    cols += [f"g_{l + 1}" for l in range(scenario.n_constraints)]
    return cols


def trace_rows(run: controller.DppRunResult, limit: int) -> Iterable[list[object]]:
    n = min(run.horizon, limit)
    for t in range(n):
        row: list[object] = [t]
        row += [float(v) for v in run.q_path[t]]
        row += [float(v) for v in run.z_path[t]]
        row += [int(run.omega_path[t]), int(run.action_path[t])]
        row += [float(v) for v in run.x_path[t]]
        row += [float(run.f_path[t])]
        row += [float(v) for v in run.g_path[t]]
        yield row


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _load_with_overrides(args: argparse.Namespace) -> Scenario:
    scenario = load_scenario(args.scenario)
    if getattr(args, "mu", None) is not None:
        scenario = override_mu(scenario, args.mu)
    if getattr(args, "lam", None) is not None:
        lams = parse_lambda_flag(args.lam, scenario.n_queues)
        scenario = override_lambdas(scenario, lams)
    return scenario


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _load_with_overrides(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    thresholds = VerdictThresholds()

    fast = is_uncontrolled_single_queue(scenario)
    config = controller.DppConfig(v_weight=args.V, mode=args.mode)
    if fast:
        def one_run(rep: int) -> controller.DppRunResult:
            return fast_single_queue_run(scenario, args.seed, args.horizon, rep)

        trace_run = one_run(0)

        def paths():
            for rep in range(args.reps):
                yield one_run(rep).q_path[: args.horizon].sum(axis=1)
    else:
        totals, trace_run = collect_total_backlogs(
            scenario, config, args.seed, args.horizon, args.reps, args.workers
        )

        def paths():
            return iter(totals)

    verdict = _verdict_for_runs(paths, args.reps, args.horizon, thresholds)

    write_csv(
        out / "trace.csv",
        trace_header(scenario),
        trace_rows(trace_run, args.trace_limit),
    )
    write_csv(out / "curves.csv", ["M", "g", "h_mean", "h_p05", "h_p95"], curve_rows(verdict))
    items: list[tuple[str, object]] = [
        ("command", "simulate"),
        ("scenario", scenario.name),
        ("seed", args.seed),
        ("horizon", args.horizon),
        ("reps", args.reps),
        ("mode", args.mode),
        ("V", args.V),
        ("controller", "fast-single-queue" if fast else "dpp"),
        ("mean_backlog", verdict.strong_metric),
    ]
    items += verdict_report_items(verdict)
    write_report(out / "report.txt", items)

    stable_count = sum(
        1
        for flag in (
            verdict.rate_stable,
            verdict.mean_rate_stable,
            verdict.steady_state_stable,
            verdict.strongly_stable,
        )
        if flag
    )
    _echo(f"verdict: stable x{stable_count}")
    _echo(f"mean backlog: {verdict.strong_metric:.6g}")
    _echo(f"wrote {out / 'report.txt'}, {out / 'trace.csv'}, {out / 'curves.csv'}")
    return 0


def cmd_stability(args: argparse.Namespace) -> int:
    scenario = _load_with_overrides(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    thresholds = VerdictThresholds()
    fast = is_uncontrolled_single_queue(scenario)
    config = controller.DppConfig(v_weight=args.V, mode=args.mode)

    if fast:
        def paths():
            for rep in range(args.reps):
                run = fast_single_queue_run(scenario, args.seed, args.horizon, rep)
                yield run.q_path[: args.horizon].sum(axis=1)
    else:
        totals, _ = collect_total_backlogs(
            scenario, config, args.seed, args.horizon, args.reps, args.workers
        )

        def paths():
            return iter(totals)

    verdict = _verdict_for_runs(paths, args.reps, args.horizon, thresholds)
    write_csv(out / "curves.csv", ["M", "g", "h_mean", "h_p05", "h_p95"], curve_rows(verdict))
    items = [
        ("command", "stability"),
        ("scenario", scenario.name),
        ("seed", args.seed),
        ("horizon", args.horizon),
        ("reps", args.reps),
    ]
    items += verdict_report_items(verdict)
    write_report(out / "report.txt", items)
    for key, value in verdict_report_items(verdict):
        _echo(f"{key}={_fmt(value)}")
    return 0


def cmd_capacity(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if getattr(args, "mu", None) is not None:
        scenario = override_mu(scenario, args.mu)
    lams = (
        parse_lambda_flag(args.lam, scenario.n_queues) if args.lam is not None else None
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    report = capacity_mod.solve_fopt(scenario, lams)
    items: list[tuple[str, object]] = [
        ("command", "capacity"),
        ("scenario", scenario.name),
        ("lambda", list(scenario.lambdas if lams is None else lams)),
        ("feasible", report.feasible),
        ("f_opt", report.f_opt),
        ("d_max", report.d_max),
        ("binding_constraints", list(report.binding_constraints)),
        ("routing_outer_bound", report.routing_outer_bound),
    ]
    if report.policy is not None:
        for w, dist in enumerate(report.policy.distributions):
            label = scenario.omega_chain.labels[w]
            for i, prob in enumerate(dist):
                name = scenario.actions[w][i].name
                items.append((f"policy[{label}][{name}]", float(prob)))
    write_report(out / "capacity.txt", items)
    for key, value in items:
        _echo(f"{key}={_fmt(value)}")

    if args.sweep_scale:
        scales = [float(s) for s in args.sweep_scale.split(",")]
        base = np.asarray(scenario.lambdas if lams is None else lams, dtype=float)
        rows = []
        for scale in scales:
            lam_vec = scale * base
            rep = capacity_mod.solve_fopt(scenario, lam_vec)
            rows.append(
                [scale, *[float(v) for v in lam_vec], rep.feasible, rep.f_opt, rep.d_max]
            )
        header = ["scale"] + [f"lambda_{k + 1}" for k in range(scenario.n_queues)] + [
            "feasible",
            "f_opt",
            "d_max",
        ]
        write_csv(out / "capacity_sweep.csv", header, rows)
        _echo(f"wrote {out / 'capacity_sweep.csv'}")
    return 0


def cmd_sweep_v(args: argparse.Namespace) -> int:
    scenario = _load_with_overrides(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cap = capacity_mod.solve_fopt(scenario)
    if not cap.feasible or cap.d_max <= 0.0:
        print(
            "error: V-sweep needs a strictly interior arrival-rate vector "
            f"(lambda_in_capacity={str(cap.feasible).lower()}, d_max={cap.d_max})",
            file=sys.stderr,
        )
        return 1
    drift = controller.drift_constants(scenario)
    epsilon = drift.d_max / 4.0

    v_list = [float(v) for v in args.V_list.split(",")]
    rows = []
    for v_param in v_list:
        config = controller.DppConfig(v_weight=v_param, mode=args.mode)
        runs = run_replications(
            scenario, config, args.seed, args.horizon, args.reps, args.workers
        )
        avg_backlog = float(np.mean([r.avg_backlog_sum for r in runs]))
        avg_cost = float(np.mean([r.avg_cost for r in runs]))
        avg_g = np.mean([r.avg_g for r in runs], axis=0)
        bounds = capacity_mod.performance_bounds(scenario, v_param, epsilon, drift)
        rows.append(
            [v_param, avg_backlog, avg_cost]
            + [float(g) for g in avg_g]
            + [bounds.backlog_bound, bounds.cost_bound]
        )
    header = (
        ["V", "avg_backlog", "avg_cost"]
        + [f"g_avg_{l + 1}" for l in range(scenario.n_constraints)]
        + ["backlog_bound", "cost_bound"]
    )
    write_csv(out / "sweep.csv", header, rows)
    write_report(
        out / "sweep_report.txt",
        [
            ("command", "sweep-v"),
            ("scenario", scenario.name),
            ("seed", args.seed),
            ("horizon", args.horizon),
            ("reps", args.reps),
            ("f_opt", cap.f_opt),
            ("d_max", cap.d_max),
            ("B", drift.B),
            ("D", drift.D),
            ("T", drift.T),
            ("epsilon", epsilon),
        ],
    )
    _echo(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")
    return 0


def _cex_report(name: str, seed: int) -> tuple[list[tuple[str, object]], list, bool]:
    """Regenerate a counter-example and check its documented signature."""
    checks: list[tuple[str, object]] = [("command", "counterexample"), ("name", name)]
    if name == "rate-not-mean":
        ens = stability.cex_rate_not_mean(seed, horizon=41, n_reps=100_000)
        mean6 = float(ens.backlog[:, 6].mean() / 6.0)
        frac_zero_at_40 = float((ens.backlog[:, 40] == 0.0).mean())
        slope_final = float(np.median(ens.backlog[:, 40] / 40.0))
        ok = (
            abs(mean6 - (2.0**6) / 6.0) <= 0.1 * (2.0**6) / 6.0
            and frac_zero_at_40 >= 0.99
            and slope_final <= 1e-9
        )
        checks += [
            ("mean_Q6_over_6", mean6),
            ("expected_mean_Q6_over_6", (2.0**6) / 6.0),
            ("fraction_zero_at_t40", frac_zero_at_40),
            ("median_final_slope", slope_final),
        ]
        profile = _mean_profile_rows(ens)
    elif name == "mean-not-rate":
        ens = stability.cex_mean_not_rate(seed, horizon=200, n_reps=100_000)
        mean100 = float(ens.backlog[:, 100].mean())
        spikes = float((ens.backlog[:, 100:200] > 0).any(axis=1).mean())
        expected_spikes = 1.0 - float(np.prod(1.0 - 1.0 / np.arange(100, 200)))
        ok = abs(mean100 - 1.0) <= 0.1 and abs(spikes - expected_spikes) <= 0.02
        checks += [
            ("mean_Q100", mean100),
            ("spike_fraction_window_100_200", spikes),
            ("expected_spike_fraction", expected_spikes),
        ]
        profile = _mean_profile_rows(ens)
    elif name == "strong-not-rate":
        horizon = 2**20 + 1
        ens = stability.cex_strong_not_rate(horizon)
        path = ens.backlog[0]
        running = float(path.sum() / horizon)
        target = (2.0**21 - 1.0) / (2.0**20 + 1.0)
        spikes_exact = all(path[2**n] / 2**n == 1.0 for n in range(0, 21))
        ok = abs(running - target) <= 1e-12 and abs(running - 2.0) <= 0.005 * 2.0 and spikes_exact
        checks += [
            ("running_average", running),
            ("running_average_target", target),
            ("rate_slope_at_powers_of_two", 1.0),
            ("spikes_exact", spikes_exact),
        ]
        profile = _mean_profile_rows(ens)
    else:
        raise ValueError(f"unknown counterexample {name!r}")
    checks.append(("signature_ok", ok))
    return checks, profile, ok


def _mean_profile_rows(ens: stability.TraceEnsemble) -> list[list[object]]:
    mean_path = ens.backlog.mean(axis=0)
    cum = np.cumsum(mean_path)
    return [
        [int(t), float(mean_path[t]), float(cum[t] / (t + 1))]
        for t in ens.checkpoints
    ]


def cmd_counterexample(args: argparse.Namespace) -> int:
    if args.name not in COUNTEREXAMPLES:
        print(
            f"error: unknown counterexample {args.name!r}; "
            f"choose from {', '.join(COUNTEREXAMPLES)}",
            file=sys.stderr,
        )
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checks, profile, ok = _cex_report(args.name, args.seed)
    write_report(out / "report.txt", checks)
    write_csv(out / "profile.csv", ["t", "mean_backlog", "running_mean"], profile)
    for key, value in checks:
        _echo(f"{key}={_fmt(value)}")
    return 0 if ok else 1


def cmd_bb1(args: argparse.Namespace) -> int:
    try:
        q_bar, w_bar = bb1_closed_form(BB1Params(lam=args.lam, mu=args.mu))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    items: list[tuple[str, object]] = [
        ("command", "bb1"),
        ("lambda", args.lam),
        ("mu", args.mu),
        ("Q_bar", q_bar),
        ("W_bar", w_bar),
    ]
    if args.simulate:
        ens = stability.bb1_ensemble(
            args.lam, args.mu, horizon=args.horizon, n_reps=args.reps, seed=args.seed
        )
        items.append(("measured_mean_backlog", float(ens.backlog.mean())))
    for key, value in items:
        _echo(f"{key}={_fmt(value)}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / "bb1.txt", items)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_common(parser: argparse.ArgumentParser, *, reps_default: int) -> None:
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--horizon", type=_positive_int, default=100_000)
    parser.add_argument("--reps", type=_positive_int, default=reps_default)
    parser.add_argument("--mode", choices=("respect", "clamped"), default="respect")
    parser.add_argument("--out", default="out")
    parser.add_argument("--workers", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetlab",
        description="Discrete-time queueing-network laboratory",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a scenario and classify stability")
    p_sim.add_argument("scenario")
    p_sim.add_argument("--lambda", dest="lam", default=None)
    p_sim.add_argument("--mu", type=float, default=None)
    p_sim.add_argument("--V", type=float, default=10.0)
    p_sim.add_argument("--trace-limit", type=_positive_int, default=10_000)
    _add_common(p_sim, reps_default=100)
    p_sim.set_defaults(func=cmd_simulate)

    p_stab = sub.add_parser("stability", help="stability verdict and tail curves only")
    p_stab.add_argument("scenario")
    p_stab.add_argument("--lambda", dest="lam", default=None)
    p_stab.add_argument("--mu", type=float, default=None)
    p_stab.add_argument("--V", type=float, default=10.0)
    _add_common(p_stab, reps_default=100)
    p_stab.set_defaults(func=cmd_stability)

    p_cap = sub.add_parser("capacity", help="capacity-region LP report")
    p_cap.add_argument("scenario")
    p_cap.add_argument("--lambda", dest="lam", default=None)
    p_cap.add_argument("--mu", type=float, default=None)
    p_cap.add_argument("--sweep-scale", default=None)
    p_cap.add_argument("--out", default="out")
    p_cap.set_defaults(func=cmd_capacity)

    p_sweep = sub.add_parser("sweep-v", help="sweep the performance weight V")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--lambda", dest="lam", default=None)
    p_sweep.add_argument("--mu", type=float, default=None)
    p_sweep.add_argument("--V", dest="V_list", default="1,10,100")
    _add_common(p_sweep, reps_default=1)
    p_sweep.set_defaults(func=cmd_sweep_v)

    p_cex = sub.add_parser("counterexample", help="regenerate a pathological process")
    p_cex.add_argument("name")
    p_cex.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_cex.add_argument("--out", default="out")
    p_cex.set_defaults(func=cmd_counterexample)

    p_bb1 = sub.add_parser("bb1", help="Bernoulli/Bernoulli/1 closed forms")
    p_bb1.add_argument("--lambda", dest="lam", type=float, required=True)
    p_bb1.add_argument("--mu", type=float, required=True)
    p_bb1.add_argument("--simulate", action="store_true")
    p_bb1.add_argument("--horizon", type=_positive_int, default=100_000)
    p_bb1.add_argument("--reps", type=_positive_int, default=20)
    p_bb1.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_bb1.add_argument("--out", default=None)
    p_bb1.set_defaults(func=cmd_bb1)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
