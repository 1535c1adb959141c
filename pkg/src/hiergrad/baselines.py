"""Comparator configurations expressed as degenerate engine setups.

Every baseline reuses the slot protocol with a restricted step budget:

- master-only: the full budget runs at the master, workers just execute.
- worker-only: the master relays its (stale) warm start and aggregate
  untouched; all steps run at the workers.
- single-step: one worker step, nothing at the master.
- delayed-centralized-ogd: one master step on exact (uncompressed) delayed
  data, workers execute the result as-is.
"""

from __future__ import annotations

from dataclasses import replace

from .compression import IdentityCompression
from .costs import CostScenario
from .engine import EngineParams, MODE_LOCAL, MODE_ZERO_LOCAL, run_episode
from .network import DelayConfig
from .trace import RunTrace

BASELINE_KINDS = ("master-only", "worker-only", "single-step", "delayed-centralized-ogd")


def baseline_params(kind: str, base: EngineParams) -> EngineParams:
    """Map a baseline kind onto engine parameters, starting from ``base``."""
    total = base.master_steps + base.worker_steps
    if kind == "master-only":
        return replace(base, master_steps=total, worker_steps=0)
    if kind == "worker-only":
        return replace(base, master_steps=0, worker_steps=total)
    if kind == "single-step":
        return replace(base, master_steps=0, worker_steps=1)
    if kind == "delayed-centralized-ogd":
        return replace(base, master_steps=1, worker_steps=0, compression=IdentityCompression())
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")


def run_baseline(
    kind: str,
    scenario: CostScenario,
    delay: DelayConfig,
    base: EngineParams,
) -> RunTrace:
    """Run one baseline; the trace is column-compatible with protocol traces."""
    params = baseline_params(kind, base)
    mode = MODE_ZERO_LOCAL if delay.tau_l == 0 else MODE_LOCAL
    trace = run_episode(scenario, params, delay, mode=mode)
    trace.meta["baseline"] = kind
    return trace
