"""Per-slot execution record produced by an episode run."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


@dataclass
class RunTrace:
    """Columnar per-slot record over t = 1..T.

    ``executed[t-1]`` is the concatenated global decision at slot t;
    ``optimum`` holds the per-slot constrained minimizers. Error columns
    (``eps`` and its per-estimator components) are attached later by the
    metrics layer since they depend on the compression scheme. Cumulative
    columns are exposed as prefix-sum properties so they can never drift
    out of sync with the per-slot columns.
    """

    executed: np.ndarray       # (T, n)
    cost: np.ndarray           # (T,)
    optimum: np.ndarray        # (T, n)
    opt_cost: np.ndarray       # (T,)
    warmup_slots: int
    meta: dict = field(default_factory=dict)
    eps: np.ndarray | None = None
    eps_master: np.ndarray | None = None
    eps_worker: np.ndarray | None = None

    def __post_init__(self):
        t = self.cost.shape[0]
        if not (self.executed.shape[0] == self.optimum.shape[0] == self.opt_cost.shape[0] == t):
            raise ContractError("trace columns have inconsistent lengths")
        if self.executed.shape != self.optimum.shape:
            raise ContractError("executed and optimum decision shapes differ")

    @property
    def horizon(self) -> int:
        return self.cost.shape[0]

    @property
    def regret_per_slot(self) -> np.ndarray:
        return self.cost - self.opt_cost

    @property
    def regret_cum(self) -> np.ndarray:
        return np.cumsum(self.regret_per_slot)

    @property
    def track_err(self) -> np.ndarray:
        return np.linalg.norm(self.executed - self.optimum, axis=1)

    @property
    def opt_steps(self) -> np.ndarray:
        """Per-slot optimum displacement with the t=1 displacement set to zero."""
        steps = np.zeros(self.horizon)
        if self.horizon > 1:
            steps[1:] = np.linalg.norm(np.diff(self.optimum, axis=0), axis=1)
        return steps

    @property
    def path_cum(self) -> np.ndarray:
        return np.cumsum(self.opt_steps)

    @property
    def path2_cum(self) -> np.ndarray:
        return np.cumsum(self.opt_steps**2)

    def _need_eps(self):
        if self.eps is None:
            raise ContractError("error columns not attached; run the metrics layer first")

    @property
    def delta_cum(self) -> np.ndarray:
        self._need_eps()
        return np.cumsum(self.eps)

    @property
    def delta2_cum(self) -> np.ndarray:
        self._need_eps()
        return np.cumsum(self.eps**2)
