"""Tracking metrics over completed traces: dynamic regret, path lengths,
certified gradient-error measures, and the tracking-error recursion checks.

The error measures are worst-case (supremum over the feasible set) gaps
between the gradients the protocol actually builds and the true gradients of
the functions those gradients chase. For the coupled-quadratic family the gap
is affine in the decision, e(x) = E x + v, so the supremum admits the sound
closed-form envelope ||E||_2 * sup||x|| + ||v||. Two estimators act each
slot - the master's (all data recovered and aged by the total delay) and the
workers' (own data fresh, cross data recovered and aged) - and the per-slot
measure is the larger of the two certified envelopes, with both components
recorded.
"""

from __future__ import annotations

import numpy as np

from .costs import CostScenario, LocalData
from .engine import EngineParams
from .errors import ContractError
from .network import DelayConfig
from .trace import RunTrace


def dynamic_regret(trace: RunTrace) -> float:
    """Total cost gap versus the per-slot optima."""
    return float(np.sum(trace.regret_per_slot))


def path_length(trace: RunTrace) -> float:
    """Cumulative displacement of the per-slot optima (t=0 optimum := t=1 optimum)."""
    return float(np.sum(trace.opt_steps))


def squared_path_length(trace: RunTrace) -> float:
    return float(np.sum(trace.opt_steps**2))


def grad_at_optima_sq(trace: RunTrace, scenario: CostScenario) -> float:
    """Sum over slots of ||grad f_t(x_t^*)||^2 (vanishes at interior optima)."""
    total = 0.0
    for t in range(1, trace.horizon + 1):
        g = scenario.full_gradient(t, trace.optimum[t - 1])
        total += float(g @ g)
    return total


# -- certified gradient-error envelopes --------------------------------------


def error_affine_parts(own_view: list, cross_view: list, target: list) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (E, v) of the gradient gap e(x) = E x + v.

    ``own_view[c]`` is the data worker c's own terms are built from,
    ``cross_view[l]`` the data everyone's cross terms use for worker l, and
    ``target[c]`` the true data of the function being estimated.
    """
    c_count = len(target)
    if len(own_view) != c_count or len(cross_view) != c_count:
        raise ContractError("estimator views must cover every worker")
    dims = [d.a.shape[1] for d in target]
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    n = int(offsets[-1])
    e = np.zeros((n, n))
    v = np.zeros(n)
    for c in range(c_count):
        rows = slice(offsets[c], offsets[c + 1])
        own = own_view[c]
        tgt = target[c]
        # both target-share sums accumulate in worker order so that identical
        # views give an exactly zero gap, not float noise
        b_est = np.zeros_like(own.b)
        b_true = np.zeros_like(own.b)
        for l in range(c_count):
            cols = slice(offsets[l], offsets[l + 1])
            if l == c:
                e[rows, cols] = own.a.T @ own.a - tgt.a.T @ tgt.a
                b_est = b_est + own.b
            else:
                e[rows, cols] = own.a.T @ cross_view[l].a - tgt.a.T @ target[l].a
                b_est = b_est + cross_view[l].b
            b_true = b_true + target[l].b
        v[rows] = tgt.a.T @ b_true - own.a.T @ b_est
    return e, v


def error_envelope(e: np.ndarray, v: np.ndarray, norm_sup: float) -> float:
    """Sound supremum of ||E x + v|| over {x : ||x|| <= norm_sup}."""
    return float(np.linalg.norm(e, 2) * norm_sup + np.linalg.norm(v))


def recovered_slot_data(scenario: CostScenario, params: EngineParams, stamp: int) -> list:
    """Reproduce the master's recovered data for one stamped slot."""
    out = []
    for c in range(scenario.num_workers):
        d = scenario.data(stamp, c)
        blob = params.compression.compress(d.a, d.b, worker=c, stamp=stamp)
        a_hat, b_hat = params.compression.recover(blob)
        out.append(LocalData(a_hat, b_hat))
    return out


def attach_error_measures(
    trace: RunTrace,
    scenario: CostScenario,
    params: EngineParams,
    delay: DelayConfig,
) -> tuple[float, float]:
    """Fill the per-slot certified error columns and return (Delta, Delta2).

    Warmup slots, where no estimator exists, contribute zero. For every
    protocol slot t the master component measures recovered total-delay-aged
    data against the true data of that same aged slot (pure codec error),
    and the worker component measures fresh-own / recovered-cross data
    against the true data of the worker's slot (codec error plus the
    round-trip staleness of the cross terms).
    """
    horizon = trace.horizon
    x_sup = scenario.feasible.norm_sup
    eps_m = np.zeros(horizon)
    eps_w = np.zeros(horizon)
    tau = delay.total
    for t in range(tau + 1, horizon + 1):
        stamp_master = t - tau
        stamp_worker = t - delay.tau_l
        recovered = recovered_slot_data(scenario, params, stamp_master)
        target_m = scenario.slot_data(stamp_master)
        e, v = error_affine_parts(recovered, recovered, target_m)
        eps_m[t - 1] = error_envelope(e, v, x_sup)
        target_w = scenario.slot_data(stamp_worker)
        e, v = error_affine_parts(target_w, recovered, target_w)
        eps_w[t - 1] = error_envelope(e, v, x_sup)
    trace.eps_master = eps_m
    trace.eps_worker = eps_w
    trace.eps = np.maximum(eps_m, eps_w)
    return float(np.sum(trace.eps)), float(np.sum(trace.eps**2))


def gradient_error_measures(
    trace: RunTrace,
    scenario: CostScenario,
    params: EngineParams,
    delay: DelayConfig,
) -> tuple[float, float]:
    """(Delta, Delta2) for a completed run, attaching the columns if needed."""
    if trace.eps is None:
        return attach_error_measures(trace, scenario, params, delay)
    return float(np.sum(trace.eps)), float(np.sum(trace.eps**2))


# -- recursion checks over completed traces ----------------------------------


def _chain_constants(eta: float, j_l: int, j_r: int) -> tuple[float, float, float]:
    root = np.sqrt(eta)
    root_total = root ** (j_l + j_r)
    root_local = root**j_l
    err_coef = (1.0 - root_total) / (1.0 - root) if root < 1.0 else float(j_l + j_r)
    return root_total, root_local, err_coef


def tracking_recursion_slack(
    trace: RunTrace,
    scenario: CostScenario,
    params: EngineParams,
    delay: DelayConfig,
    gamma: float,
) -> float:
    """Slack of the horizon-level tracking-error recursion on a zero-local run.

    Assembles the per-step contraction inequalities over the whole horizon:
    the discounted sum of post-warmup tracking errors must be covered by the
    drift term and the accumulated certified gradient error. Nonnegative
    slack means the inequality holds.
    """
    if trace.meta.get("tau_l", 0) != 0:
        raise ContractError("the horizon recursion applies to zero-local-delay runs")
    from .bounds import contraction_beta, contraction_eta

    eta = contraction_eta(params.alpha, scenario.mu, gamma)
    beta = contraction_beta(params.alpha, scenario.mu, gamma)
    root_total, root_local, err_coef = _chain_constants(eta, params.worker_steps, params.master_steps)
    delta, _ = gradient_error_measures(trace, scenario, params, delay)
    d = trace.track_err
    warm = trace.warmup_slots
    tau_r = delay.round_trip
    lhs = (1.0 - root_total) * float(np.sum(d[warm:])) - root_total * float(np.sum(d[:warm]))
    rhs = root_local * tau_r * path_length(trace) + err_coef * np.sqrt(beta) * delta
    return float(rhs - lhs)


def slotwise_tracking_slacks(
    trace: RunTrace,
    scenario: CostScenario,
    params: EngineParams,
    delay: DelayConfig,
    gamma: float,
) -> np.ndarray:
    """Per-slot contraction slack for every protocol slot of a zero-local run.

    Each slot's tracking error must be covered by the contracted error of the
    round-trip-old slot, the optimum drift across the window, and the
    certified per-slot gradient error.
    """
    if trace.meta.get("tau_l", 0) != 0:
        raise ContractError("the per-slot chain applies to zero-local-delay runs")
    from .bounds import contraction_beta, contraction_eta

    eta = contraction_eta(params.alpha, scenario.mu, gamma)
    beta = contraction_beta(params.alpha, scenario.mu, gamma)
    j_l, j_r = params.worker_steps, params.master_steps
    root = np.sqrt(eta)
    root_local = root**j_l
    lead = eta ** ((j_l + j_r) / 2.0)
    err_coef = root_local * (1.0 - root**j_r) / (1.0 - root) + (1.0 - root_local) / (1.0 - root) \
        if root < 1.0 else float(j_l + j_r)
    gradient_error_measures(trace, scenario, params, delay)
    d = trace.track_err
    steps = trace.opt_steps
    tau_r = delay.round_trip
    warm = trace.warmup_slots
    slacks = []
    for t in range(warm + 1, trace.horizon + 1):
        window_drift = float(np.sum(steps[t - tau_r : t]))
        rhs = lead * d[t - tau_r - 1] + root_local * window_drift \
            + np.sqrt(beta) * err_coef * trace.eps[t - 1]
        slacks.append(rhs - d[t - 1])
    return np.asarray(slacks)
