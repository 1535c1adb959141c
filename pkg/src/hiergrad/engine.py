"""Two-tier slot protocol: delayed multi-step descent at the master, timely
multi-step descent at the workers.

Each slot proceeds as: deliveries first, then algorithm steps, then sends.
The master warm-starts every worker's block at the decision it executed one
total delay ago, runs its step budget on gradients built purely from
recovered (compressed, stale) uplink data, and ships each worker the refined
block together with the cross-worker aggregate evaluated at the refined
blocks. The worker then runs its own step budget against its freshest local
data, holding the received aggregate frozen, executes the result, and uplinks
the executed block plus its encoded data.

Within each master step all blocks advance simultaneously: every worker's
gradient reads the other workers' previous-step blocks, never same-step ones.

Only the round trip matters to the decision process, so the fabric is wired
as a single uplink carrying the full round-trip delay and an immediate
downlink; the configured uplink/downlink split is retained in the metadata
and equal round trips produce identical executed traces regardless of split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compression import IdentityCompression
from .costs import CostScenario, LocalData, cross_term, local_gradient
from .errors import ProtocolError
from .geometry import FeasibleSet, gradient_step
from .network import DelayConfig, DownlinkPayload, Link, UplinkPayload
from .trace import RunTrace

MODE_ZERO_LOCAL = "zero_local_delay"
MODE_LOCAL = "local_delay"


@dataclass(frozen=True)
class EngineParams:
    """Step-size parameter, per-tier step budgets, and the data codec."""

    alpha: float
    master_steps: int
    worker_steps: int
    compression: object = field(default_factory=IdentityCompression)
    init_seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.master_steps < 0 or self.worker_steps < 0:
            raise ValueError("step counts must be nonnegative")
        if self.master_steps + self.worker_steps < 1:
            raise ValueError("at least one descent step is required across the two tiers")


def warmup_decision(feasible: FeasibleSet, worker: int, t: int, init_seed: int) -> np.ndarray:
    """Seed-deterministic feasible block played before the protocol starts."""
    rng = np.random.default_rng(np.random.SeedSequence((init_seed, worker, t)))
    return feasible.sample_block(worker, rng)


def master_slot(
    feasible: FeasibleSet,
    mu: float,
    target_dim: int,
    decisions: dict,
    estimates: dict,
    params: EngineParams,
) -> list[DownlinkPayload]:
    """One master slot: warm start, step budget, and per-worker downlinks.

    ``decisions`` and ``estimates`` are the appropriately stale per-worker
    blocks and recovered data the driver looked up for this slot.
    """
    workers = list(range(feasible.num_workers))
    if set(decisions) != set(workers) or set(estimates) != set(workers):
        raise ProtocolError(
            f"master needs a decision and a data estimate for every worker; "
            f"have decisions for {sorted(decisions)} and data for {sorted(estimates)}"
        )
    blocks = {c: np.asarray(decisions[c], dtype=float).copy() for c in workers}
    for _ in range(params.master_steps):
        grads = {}
        for c in workers:
            ginfo = cross_term([(estimates[l], blocks[l]) for l in workers if l != c], target_dim)
            grads[c] = local_gradient(estimates[c], blocks[c], ginfo, mu)
        blocks = {c: gradient_step(feasible, c, blocks[c], grads[c], params.alpha) for c in workers}
    payloads = []
    for c in workers:
        ginfo = cross_term([(estimates[l], blocks[l]) for l in workers if l != c], target_dim)
        payloads.append(DownlinkPayload(worker=c, intermediate=blocks[c], ginfo=ginfo))
    return payloads


def worker_slot(
    scenario: CostScenario,
    c: int,
    t: int,
    params: EngineParams,
    payload: DownlinkPayload,
    tau_l: int,
) -> tuple[np.ndarray, UplinkPayload]:
    """One worker slot: local step budget on the freshest own data, execution,
    and the uplink for the master.

    The received aggregate stays frozen across all local steps. The worker
    touches only its own data stream; everything about the other workers
    arrives through the payload.
    """
    if payload.worker != c:
        raise ProtocolError(f"worker {c} received a downlink addressed to {payload.worker}")
    data_slot = t - tau_l
    own = scenario.data(data_slot, c)
    x = np.asarray(payload.intermediate, dtype=float).copy()
    for _ in range(params.worker_steps):
        g = local_gradient(own, x, payload.ginfo, scenario.mu)
        x = gradient_step(scenario.feasible, c, x, g, params.alpha)
    blob = params.compression.compress(own.a, own.b, worker=c, stamp=data_slot)
    return x, UplinkPayload(worker=c, decision=x, blob=blob)


def run_episode(
    scenario: CostScenario,
    params: EngineParams,
    delay: DelayConfig,
    mode: str = MODE_ZERO_LOCAL,
) -> RunTrace:
    """Drive the full horizon and return the per-slot trace.

    The protocol starts at t > tau_l + tau_r; earlier slots execute
    seed-pinned random feasible decisions (counted in regret) while uplinks
    prime the master's state.
    """
    if mode not in (MODE_ZERO_LOCAL, MODE_LOCAL):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == MODE_ZERO_LOCAL and delay.tau_l != 0:
        raise ValueError("zero-local-delay mode requires tau_l == 0")
    consts = scenario.constants()
    if params.alpha < consts.smoothness * (1.0 - 1e-12):
        raise ValueError(
            f"alpha={params.alpha} is below the certified smoothness {consts.smoothness}"
        )
    tau_r = delay.round_trip
    tau = delay.total
    feasible = scenario.feasible
    c_count = scenario.num_workers
    horizon = scenario.horizon

    uplink = Link(delay=tau_r)  # round-trip collapsed onto the uplink
    downlink = Link(delay=0)
    decisions_by_stamp: dict[int, dict[int, np.ndarray]] = {}
    estimates_by_stamp: dict[int, dict[int, LocalData]] = {}

    executed = np.zeros((horizon, scenario.dim))
    cost = np.zeros(horizon)
    optimum = np.zeros((horizon, scenario.dim))
    opt_cost = np.zeros(horizon)

    for t in range(1, horizon + 1):
        # deliveries first
        for payload in uplink.deliver(t):
            stamp = t - tau_r  # uplinks carry the decision executed at their send slot
            decisions_by_stamp.setdefault(stamp, {})[payload.worker] = payload.decision
            if payload.blob is not None:
                a_hat, b_hat = params.compression.recover(payload.blob)
                if payload.blob.stamp != stamp - delay.tau_l:
                    raise ProtocolError(
                        f"uplink data stamped {payload.blob.stamp}, expected {stamp - delay.tau_l}"
                    )
                estimates_by_stamp.setdefault(payload.blob.stamp, {})[payload.worker] = LocalData(a_hat, b_hat)

        # master acts on information aged by the total delay
        if t > tau:
            try:
                dec = decisions_by_stamp[t - tau]
                est = estimates_by_stamp[t - tau]
            except KeyError as exc:
                raise ProtocolError(f"master is missing state stamped {t - tau} at slot {t}") from exc
            for payload in master_slot(feasible, scenario.mu, scenario.target_dim, dec, est, params):
                downlink.send(t, payload)

        inbox = {p.worker: p for p in downlink.deliver(t)}
        blocks = []
        for c in range(c_count):
            if t > tau:
                if c not in inbox:
                    raise ProtocolError(f"worker {c} has no downlink at slot {t}")
                x_c, up = worker_slot(scenario, c, t, params, inbox[c], delay.tau_l)
            else:
                x_c = warmup_decision(feasible, c, t, params.init_seed)
                blob = None
                if t - delay.tau_l >= 1:
                    own = scenario.data(t - delay.tau_l, c)
                    blob = params.compression.compress(own.a, own.b, worker=c, stamp=t - delay.tau_l)
                up = UplinkPayload(worker=c, decision=x_c, blob=blob)
            blocks.append(x_c)
            uplink.send(t, up)

        x_t = feasible.concat(blocks)
        executed[t - 1] = x_t
        cost[t - 1] = scenario.cost(t, x_t)
        x_star, f_star = scenario.optimum(t)
        optimum[t - 1] = x_star
        opt_cost[t - 1] = f_star

    meta = {
        "mode": mode,
        "tau_u": delay.tau_u,
        "tau_d": delay.tau_d,
        "tau_l": delay.tau_l,
        "tau_r": tau_r,
        "tau": tau,
        "alpha": params.alpha,
        "master_steps": params.master_steps,
        "worker_steps": params.worker_steps,
        "compression": params.compression.describe(),
        "init_seed": params.init_seed,
        "scenario_seed": scenario.spec.seed,
        "optimum_shift_convention": "the t=0 reference optimum is taken equal to the t=1 optimum",
    }
    return RunTrace(
        executed=executed,
        cost=cost,
        optimum=optimum,
        opt_cost=opt_cost,
        warmup_slots=min(tau, horizon),
        meta=meta,
    )
