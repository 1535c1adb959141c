"""Acceptance suite: one callable per criterion, shared by pytest and the CLI.

Each criterion returns a CriterionResult with a pass flag and a one-line
detail. Expensive runs (the drift-scenario bound runs) are computed once and
shared across criteria through the context object.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import config as cfg
from .bounds import (
    contraction_eta,
    evaluate_bounds,
    one_step_contraction_slack,
    random_quadratic_instance,
)
from .engine import MODE_LOCAL, MODE_ZERO_LOCAL, run_episode, warmup_decision
from .costs import ScenarioSpec, DriftSpec, build_scenario
from .metrics import (
    dynamic_regret,
    error_affine_parts,
    grad_at_optima_sq,
    path_length,
    recovered_slot_data,
    squared_path_length,
    tracking_recursion_slack,
)
from .network import DelayConfig

# Pinned at first build from preset "drift-bounds" (seed 42): regret of the
# (master=2, worker=2) configuration versus (master=0, worker=1). Asserted as
# a regression thereafter; the ordering reflects the stronger chained
# contraction of the larger step budget on this workload, not a guarantee.
PINNED_REGRET_STEPS_2_2 = 130.2896688298356
PINNED_REGRET_STEPS_0_1 = 159.24475863931107


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


class AcceptanceContext:
    """Lazily built shared runs for the heavyweight criteria."""

    def __init__(self):
        self._drift_runs = None

    def drift_runs(self):
        """The four drift-scenario bound runs: tau_r in {1,3} x {identity, quantized}."""
        if self._drift_runs is not None:
            return self._drift_runs
        runs = []
        for tau_u in (1, 3):
            for preset_name in ("drift-bounds", "drift-bounds-quantized"):
                doc = cfg.preset(preset_name)
                doc["delay"]["tau_u"] = tau_u
                exp = cfg.resolve(doc)
                trace = run_episode(exp.scenario, exp.params, exp.delay, mode=exp.mode)
                report = evaluate_bounds(trace, exp.scenario, exp.params, exp.delay, exp.gamma)
                runs.append((f"tau_r={tau_u}/{preset_name}", exp, trace, report))
        self._drift_runs = runs
        return runs


def contraction_inequality_batch(ctx: AcceptanceContext) -> CriterionResult:
    """1000 randomized strongly convex instances; the one-step contraction
    inequality must hold with slack >= -1e-9 in every case, in under 5 s."""
    start = time.perf_counter()
    rng = np.random.default_rng(20240607)
    worst = np.inf
    for _ in range(1000):
        mu = rng.uniform(0.5, 2.0)
        smooth = mu * rng.uniform(1.0, 10.0)
        alpha = smooth * rng.uniform(1.0, 2.0)
        gamma = mu * rng.choice([0.5, 1.0, 1.5])
        dim = int(rng.integers(2, 7))
        inst = random_quadratic_instance(rng, dim, mu, smooth)
        y = inst.feasible.project(rng.normal(scale=2.0, size=dim))
        err = rng.normal(size=dim)
        err *= rng.uniform(0.0, 3.0) / max(np.linalg.norm(err), 1e-12)
        worst = min(worst, one_step_contraction_slack(inst, y, gamma, alpha, err))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and elapsed < 5.0
    return CriterionResult(
        "contraction_inequality_batch", ok,
        f"min slack {worst:.3e} over 1000 instances in {elapsed:.2f}s", elapsed)


def drift_bound_runs(ctx: AcceptanceContext) -> CriterionResult:
    """Measured regret must stay within every valid bound on the drift
    scenario, for both round trips and both codecs, in under 30 s."""
    start = time.perf_counter()
    details = []
    ok = True
    for label, exp, trace, report in ctx.drift_runs():
        j = exp.params.master_steps + exp.params.worker_steps
        eta = report.constants["eta"]
        if 2.0 * eta**j >= 1.0:
            ok = False
            details.append(f"{label}: squared-bound condition unexpectedly violated")
            continue
        bounds = report.valid_bounds()
        best = min(bounds.values())
        if report.regret > best:
            ok = False
            details.append(f"{label}: regret {report.regret:.4g} > min bound {best:.4g}")
        else:
            details.append(f"{label}: regret {report.regret:.4g} <= min bound {best:.4g}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 30.0
    return CriterionResult("drift_bound_runs", ok, "; ".join(details) + f" ({elapsed:.1f}s)", elapsed)


def local_delay_bound_run(ctx: AcceptanceContext) -> CriterionResult:
    """Total-delay squared bound must cover the regret of a local-delay run
    (step budget chosen so the stricter validity condition holds), under 15 s."""
    start = time.perf_counter()
    exp = cfg.resolve(cfg.preset("local-delay-bounds"))
    eta = contraction_eta(exp.params.alpha, exp.scenario.mu, exp.gamma)
    j = exp.params.master_steps + exp.params.worker_steps
    trace = run_episode(exp.scenario, exp.params, exp.delay, mode=MODE_LOCAL)
    report = evaluate_bounds(trace, exp.scenario, exp.params, exp.delay, exp.gamma)
    elapsed = time.perf_counter() - start
    cond = 4.0 * eta**j < 1.0
    value = report.bound_squared_total_delay
    ok = cond and value is not None and report.regret <= value and elapsed < 15.0
    return CriterionResult(
        "local_delay_bound_run", ok,
        f"regret {report.regret:.4g} vs bound {value:.4g}, 4*eta^J={4*eta**j:.3f} ({elapsed:.1f}s)",
        elapsed)


def static_convergence(ctx: AcceptanceContext) -> CriterionResult:
    """On a static scenario with lossless uplinks the executed decisions must
    lock onto the per-slot optimum: tracking error <= 1e-6 after 50 protocol
    slots and final-100-slot regret increment < 1e-8, for several budgets."""
    start = time.perf_counter()
    doc = cfg.preset("static-sanity")
    exp0 = cfg.resolve(doc)
    details = []
    ok = True
    for j_r, j_l in ((1, 0), (0, 1), (2, 2)):
        params = replace(exp0.params, master_steps=j_r, worker_steps=j_l)
        trace = run_episode(exp0.scenario, params, exp0.delay, mode=MODE_ZERO_LOCAL)
        tau_r = exp0.delay.round_trip
        worst_track = float(np.max(trace.track_err[tau_r + 50 :]))
        tail_regret = float(np.sum(trace.regret_per_slot[-100:]))
        good = worst_track <= 1e-6 and tail_regret < 1e-8
        ok = ok and good
        details.append(f"steps({j_r},{j_l}): track {worst_track:.2e}, tail regret {tail_regret:.2e}")
    elapsed = time.perf_counter() - start
    return CriterionResult("static_convergence", ok, "; ".join(details), elapsed)


def split_delay_equivalence(ctx: AcceptanceContext) -> CriterionResult:
    """Executed traces must be bit-identical across uplink/downlink splits
    with the same round trip."""
    start = time.perf_counter()
    doc = cfg.preset("drift-bounds")
    doc["scenario"]["horizon"] = 80
    traces = []
    for tau_u, tau_d in ((2, 1), (3, 0), (1, 2)):
        doc_i = cfg.preset("drift-bounds")
        doc_i["scenario"]["horizon"] = 80
        doc_i["delay"] = {"tau_u": tau_u, "tau_d": tau_d, "tau_l": 0}
        exp = cfg.resolve(doc_i)
        traces.append(run_episode(exp.scenario, exp.params, exp.delay, mode=exp.mode).executed)
    ok = all(np.array_equal(traces[0], t) for t in traces[1:])
    elapsed = time.perf_counter() - start
    return CriterionResult("split_delay_equivalence", ok,
                           "identical executed traces for splits (2,1), (3,0), (1,2)" if ok
                           else "executed traces diverged across splits", elapsed)


def solver_and_reference_equivalence(ctx: AcceptanceContext) -> CriterionResult:
    """(a) closed-form vs iterative per-slot optima agree to 1e-8 on 100
    random interior instances; (b) the single-worker protocol trace matches an
    independent centralized delayed multi-step recursion to 1e-10 per slot."""
    start = time.perf_counter()
    worst_opt = 0.0
    for seed in range(100):
        spec = ScenarioSpec(
            workers=2, block_dims=(3, 3), target_dim=4, horizon=1, mu=1.0,
            drift=DriftSpec("static"), a_max=0.8, b_scale=1.0, seed=seed,
            feasible_kind="ball", feasible_size=10.0)
        sc = build_scenario(spec)
        x_closed, _ = sc.optimum(1)
        if not sc.optimum_is_interior(1):
            continue
        x_iter, _ = sc.optimum(1, force_iterative=True)
        worst_opt = max(worst_opt, float(np.linalg.norm(x_closed - x_iter)))

    spec = ScenarioSpec(
        workers=1, block_dims=(5,), target_dim=4, horizon=80, mu=1.0,
        drift=DriftSpec("decaying-walk", 0.3, 0.5), a_max=0.9, b_scale=1.0, seed=11,
        feasible_kind="ball", feasible_size=5.0)
    sc = build_scenario(spec)
    alpha = sc.constants().smoothness
    j_r, j_l, tau_r = 2, 3, 2
    from .engine import EngineParams

    params = EngineParams(alpha=alpha, master_steps=j_r, worker_steps=j_l, init_seed=5)
    trace = run_episode(sc, params, DelayConfig(tau_r, 0, 0))
    history = {}
    worst_ref = 0.0
    for t in range(1, sc.horizon + 1):
        if t <= tau_r:
            x = warmup_decision(sc.feasible, 0, t, 5)
        else:
            y = history[t - tau_r].copy()
            q_d, b_d = sc.coupling(t - tau_r)
            for _ in range(j_r):
                y = sc.feasible.project(y - (q_d.T @ (q_d @ y - b_d) + sc.mu * y) / alpha)
            q_f, b_f = sc.coupling(t)
            for _ in range(j_l):
                y = sc.feasible.project(y - (q_f.T @ (q_f @ y - b_f) + sc.mu * y) / alpha)
            x = y
        history[t] = x
        worst_ref = max(worst_ref, float(np.linalg.norm(x - trace.executed[t - 1])))
    elapsed = time.perf_counter() - start
    ok = worst_opt <= 1e-8 and worst_ref <= 1e-10
    return CriterionResult(
        "solver_and_reference_equivalence", ok,
        f"optimum gap {worst_opt:.2e} (<=1e-8), reference gap {worst_ref:.2e} (<=1e-10)", elapsed)


def measure_soundness(ctx: AcceptanceContext) -> CriterionResult:
    """(a) sampled gradient-error maxima never exceed the certified per-slot
    envelope (1e5 points, 50 slots); (b) squared path length <= diameter *
    path length on every run; (c) optima gradients vanish on interior runs."""
    start = time.perf_counter()
    runs = ctx.drift_runs()
    rng = np.random.default_rng(99)
    ok = True
    details = []

    worst_gap = -np.inf
    checked = 0
    for label, exp, trace, report in runs[:2]:  # identity + quantized at tau_r=1
        delay = exp.delay
        tau = delay.total
        slots = rng.choice(np.arange(tau + 1, trace.horizon + 1), size=25, replace=False)
        xs = exp.scenario.feasible.sample_many(rng, 100_000)
        for t in slots:
            recovered = recovered_slot_data(exp.scenario, exp.params, t - tau)
            target_m = exp.scenario.slot_data(t - tau)
            target_w = exp.scenario.slot_data(t - delay.tau_l)
            for own, cross, target in (
                (recovered, recovered, target_m),
                (target_w, recovered, target_w),
            ):
                e_mat, v = error_affine_parts(own, cross, target)
                sampled = float(np.max(np.linalg.norm(xs @ e_mat.T + v, axis=1)))
                envelope = float(np.linalg.norm(e_mat, 2) * exp.scenario.feasible.norm_sup
                                 + np.linalg.norm(v))
                worst_gap = max(worst_gap, sampled - envelope)
                checked += 1
    if worst_gap > 1e-12:
        ok = False
    details.append(f"sampled-vs-envelope max excess {worst_gap:.2e} over {checked} checks")

    for label, exp, trace, report in runs:
        pi = path_length(trace)
        pi2 = squared_path_length(trace)
        if pi2 > exp.scenario.constants().diameter * pi + 1e-12:
            ok = False
            details.append(f"{label}: squared path exceeds diameter * path")
        s = grad_at_optima_sq(trace, exp.scenario)
        interior = all(exp.scenario.optimum_is_interior(t) for t in range(1, trace.horizon + 1))
        if interior and s > 1e-12 * trace.horizon:
            ok = False
            details.append(f"{label}: optima gradients do not vanish (sum {s:.2e})")
    details.append("path and interior-gradient invariants hold on all runs" if ok else "")
    elapsed = time.perf_counter() - start
    return CriterionResult("measure_soundness", ok, "; ".join(d for d in details if d), elapsed)


def tracking_recursion(ctx: AcceptanceContext) -> CriterionResult:
    """The assembled horizon-level tracking-error recursion must hold with
    1e-6 slack on every drift bound run."""
    start = time.perf_counter()
    worst = np.inf
    for label, exp, trace, report in ctx.drift_runs():
        slack = tracking_recursion_slack(trace, exp.scenario, exp.params, exp.delay, exp.gamma)
        worst = min(worst, slack)
    ok = worst >= -1e-6
    elapsed = time.perf_counter() - start
    return CriterionResult("tracking_recursion", ok, f"min recursion slack {worst:.4g}", elapsed)


def pinned_regression(ctx: AcceptanceContext) -> CriterionResult:
    """Seed-42 drift preset: the (2,2) budget must beat the single-step
    budget, and both regrets must match the values recorded at first build."""
    start = time.perf_counter()
    doc = cfg.preset("drift-bounds")
    exp = cfg.resolve(doc)
    trace_big = run_episode(exp.scenario, exp.params, exp.delay, mode=exp.mode)
    params_small = replace(exp.params, master_steps=0, worker_steps=1)
    trace_small = run_episode(exp.scenario, params_small, exp.delay, mode=exp.mode)
    r_big = dynamic_regret(trace_big)
    r_small = dynamic_regret(trace_small)
    ordered = r_big < r_small
    match_big = abs(r_big - PINNED_REGRET_STEPS_2_2) <= 1e-6 * max(1.0, abs(PINNED_REGRET_STEPS_2_2))
    match_small = abs(r_small - PINNED_REGRET_STEPS_0_1) <= 1e-6 * max(1.0, abs(PINNED_REGRET_STEPS_0_1))
    ok = ordered and match_big and match_small
    elapsed = time.perf_counter() - start
    return CriterionResult(
        "pinned_regression", ok,
        f"regret(2,2)={r_big!r} vs regret(0,1)={r_small!r}; ordered={ordered}, "
        f"match={match_big and match_small}", elapsed)


CRITERIA = (
    contraction_inequality_batch,
    drift_bound_runs,
    local_delay_bound_run,
    static_convergence,
    split_delay_equivalence,
    solver_and_reference_equivalence,
    measure_soundness,
    tracking_recursion,
    pinned_regression,
)


def run_all(verbose: bool = True) -> list[CriterionResult]:
    ctx = AcceptanceContext()
    results = []
    for crit in CRITERIA:
        res = crit(ctx)
        results.append(res)
        if verbose:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    return results
