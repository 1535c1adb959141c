"""Coupled-quadratic global cost family with time-varying per-worker data.

The global cost at slot t is

    f_t(x) = 1/2 ||sum_c A_t^c x^c - b_t||^2 + (mu/2) ||x||^2,

with b_t = sum_c b_t^c split into per-worker shares. The residual couples all
workers, so no worker can evaluate its own partial gradient without an
aggregate of the others' terms: the partial gradient factors as

    grad_c f_t(x) = A_t^cT (A_t^c x^c - b_t^c + cross) + mu x^c,
    cross        = sum_{l != c} (A_t^l x^l - b_t^l),

which is exactly the local-update / shared-aggregate structure the slot
protocol exchanges. The family is mu-strongly convex by construction, smooth
with a horizon-wide certified modulus, and admits closed-form per-slot optima,
which makes every tracking metric and bound in this package computable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ContractError, ConvergenceError
from .geometry import FeasibleSet


@dataclass(frozen=True)
class LocalData:
    """One worker's data at one slot: coupling matrix A (m x n_c) and target share b (m,)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
            raise ContractError(f"inconsistent data shapes A{a.shape}, b{b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ContractError("local data must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class DriftSpec:
    """How the per-worker target shares move over time.

    kind "static" repeats the slot-1 data; "random-walk" perturbs each b_t^c
    by a random direction of norm sigma; "decaying-walk" shrinks the step
    norm to sigma * t^(-rho).
    """

    kind: str = "static"
    sigma: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ("static", "random-walk", "decaying-walk"):
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if self.sigma < 0 or self.rho < 0:
            raise ValueError("drift sigma and rho must be nonnegative")

    def step_norm(self, t: int) -> float:
        if self.kind == "static":
            return 0.0
        if self.kind == "random-walk":
            return self.sigma
        return self.sigma * float(t) ** (-self.rho)


@dataclass(frozen=True)
class ScenarioSpec:
    """Deterministic recipe for a scenario; matrices regenerate from the seed."""

    workers: int
    block_dims: tuple
    target_dim: int
    horizon: int
    mu: float
    drift: DriftSpec = DriftSpec()
    a_max: float = 1.0
    b_scale: float = 1.0
    seed: int = 0
    feasible_kind: str = "box"
    feasible_size: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        if self.workers < 1 or len(self.block_dims) != self.workers:
            raise ContractError("need one block dimension per worker")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    def to_json(self) -> str:
        doc = asdict(self)
        doc["block_dims"] = list(self.block_dims)
        return json.dumps(doc, sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str) -> "ScenarioSpec":
        doc = json.loads(text)
        doc["drift"] = DriftSpec(**doc["drift"])
        doc["block_dims"] = tuple(doc["block_dims"])
        return ScenarioSpec(**doc)


@dataclass(frozen=True)
class ScenarioConstants:
    """Certified problem constants over the whole horizon."""

    mu: float              # strong-convexity modulus (by construction)
    smoothness: float      # certified upper bound on the largest Hessian eigenvalue
    grad_bound: float      # certified sup of ||grad f_t|| over the feasible set and horizon
    diameter: float        # exact diameter of the feasible product set
    norm_sup: float        # exact sup of ||x|| over the feasible set
    lam_max: float         # certified max_t lambda_max(Q_t^T Q_t)


def power_iteration(mat: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Returns (rayleigh, vector, residual) where residual = ||M v - lam v||.
    The Rayleigh quotient never exceeds the true largest eigenvalue, so
    callers needing a certified upper bound should add the residual.
    """
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence((seed, n)))
    v = rng.normal(size=n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        lam_new = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:  # the zero matrix
            return 0.0, v, 0.0
        v_new = w / norm_w
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-30):
            v = v_new
            lam = lam_new
            break
        v = v_new
        lam = lam_new
    else:
        raise ConvergenceError("power iteration did not converge", tol=tol, max_iter=max_iter)
    residual = float(np.linalg.norm(m @ v - lam * v))
    return lam, v, residual


class CostScenario:
    """Immutable time-indexed problem instance.

    Slots are 1-based throughout (t = 1..T). All evaluators are pure;
    per-slot optima are memoized because the instance never changes.
    """

    def __init__(self, spec: ScenarioSpec, data: list, feasible: FeasibleSet):
        self.spec = spec
        self._data = data  # data[t-1][c] -> LocalData
        self.feasible = feasible
        self._optima: dict[int, tuple[np.ndarray, float]] = {}
        self._constants: ScenarioConstants | None = None

    # -- basic structure ----------------------------------------------------

    @property
    def num_workers(self) -> int:
        return self.spec.workers

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    @property
    def mu(self) -> float:
        return self.spec.mu

    @property
    def dim(self) -> int:
        return self.feasible.dim

    @property
    def target_dim(self) -> int:
        return self.spec.target_dim

    def _check_slot(self, t: int):
        if not 1 <= t <= self.horizon:
            raise ContractError(f"slot {t} out of range [1, {self.horizon}]")

    def data(self, t: int, c: int) -> LocalData:
        self._check_slot(t)
        if not 0 <= c < self.num_workers:
            raise ContractError(f"worker {c} out of range")
        return self._data[t - 1][c]

    def slot_data(self, t: int) -> list:
        self._check_slot(t)
        return list(self._data[t - 1])

    def coupling(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated coupling matrix Q_t = [A_t^1 ... A_t^C] and total target b_t."""
        datas = self.slot_data(t)
        q = np.hstack([d.a for d in datas])
        b = np.sum([d.b for d in datas], axis=0)
        return q, b

    # -- evaluation ---------------------------------------------------------

    def cost(self, t: int, x: np.ndarray) -> float:
        q, b = self.coupling(t)
        xv = np.asarray(x, dtype=float)
        if xv.shape[0] != self.dim:
            raise ContractError(f"decision has dim {xv.shape[0]}, expected {self.dim}")
        r = q @ xv - b
        return 0.5 * float(r @ r) + 0.5 * self.mu * float(xv @ xv)

    def full_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        q, b = self.coupling(t)
        xv = np.asarray(x, dtype=float)
        return q.T @ (q @ xv - b) + self.mu * xv

    def global_info(self, t: int, c: int, other_blocks: dict) -> np.ndarray:
        """Aggregate sum_{l != c} (A_t^l x^l - b_t^l) from true slot-t data.

        ``other_blocks`` must map every worker l != c to its block.
        """
        self._check_slot(t)
        expected = set(range(self.num_workers)) - {c}
        if set(other_blocks) != expected:
            raise ContractError(f"need blocks for exactly workers {sorted(expected)}, got {sorted(other_blocks)}")
        return cross_term([(self._data[t - 1][l], other_blocks[l]) for l in sorted(other_blocks)], self.target_dim)

    def local_gradient(self, t: int, c: int, xc: np.ndarray, ginfo: np.ndarray) -> np.ndarray:
        """Partial gradient of f_t for worker c given the cross-worker aggregate."""
        return local_gradient(self.data(t, c), xc, ginfo, self.mu)

    # -- per-slot optimum ---------------------------------------------------

    def optimum(self, t: int, force_iterative: bool = False) -> tuple[np.ndarray, float]:
        """Per-slot constrained minimizer and its cost.

        Closed-form normal-equations solve when the unconstrained minimizer is
        feasible (then it is the constrained optimum); projected gradient
        descent to tolerance 1e-10 otherwise.
        """
        self._check_slot(t)
        key = (t, force_iterative)
        if key in self._optima:
            x, f = self._optima[key]
            return x.copy(), f
        q, b = self.coupling(t)
        h = q.T @ q + self.mu * np.eye(self.dim)
        x_free = np.linalg.solve(h, q.T @ b)
        if not force_iterative and self.feasible.contains(x_free, tol=0.0):
            x_star = x_free
        else:
            x_star = self._projected_solve(t, q, b)
        f_star = self.cost(t, x_star)
        self._optima[key] = (x_star, f_star)
        return x_star.copy(), f_star

    def optimum_is_interior(self, t: int, margin: float = 1e-9) -> bool:
        x_star, _ = self.optimum(t)
        return self.feasible.is_interior(x_star, margin)

    def _projected_solve(self, t: int, q: np.ndarray, b: np.ndarray, tol: float = 1e-10, max_iter: int = 200_000):
        lam, _, resid = power_iteration(q.T @ q, seed=self.spec.seed)
        smooth = lam + resid + self.mu
        step = 2.0 / (smooth + self.mu)
        x = self.feasible.project(np.zeros(self.dim))
        for k in range(max_iter):
            g = q.T @ (q @ x - b) + self.mu * x
            x_new = self.feasible.project(x - step * g)
            if np.linalg.norm(x_new - x) <= tol * max(1.0, np.linalg.norm(x_new)):
                return x_new
            x = x_new
        raise ConvergenceError(
            "per-slot optimum solver exceeded its iteration cap",
            slot=t, iterations=max_iter, tol=tol, last_step=float(np.linalg.norm(x_new - x)),
        )

    # -- certified constants ------------------------------------------------

    def constants(self) -> ScenarioConstants:
        """Certified (mu, L, D, R) over the horizon.

        The largest Hessian eigenvalue is estimated per slot by power
        iteration; the Rayleigh value plus its residual is taken as the
        certified upper bound. The gradient bound uses the analytic envelope
        (lam_max + mu) * sup||x|| + max_t ||Q_t^T b_t||, which is sound
        (possibly loose) over the feasible set.
        """
        if self._constants is not None:
            return self._constants
        lam_max = 0.0
        qtb_max = 0.0
        for t in range(1, self.horizon + 1):
            q, b = self.coupling(t)
            lam, _, resid = power_iteration(q.T @ q, seed=self.spec.seed)
            lam_max = max(lam_max, lam + resid)
            qtb_max = max(qtb_max, float(np.linalg.norm(q.T @ b)))
        x_sup = self.feasible.norm_sup
        smooth = lam_max + self.mu
        grad_bound = smooth * x_sup + qtb_max
        self._constants = ScenarioConstants(
            mu=self.mu,
            smoothness=smooth,
            grad_bound=grad_bound,
            diameter=self.feasible.diameter,
            norm_sup=x_sup,
            lam_max=lam_max,
        )
        return self._constants

    def data_abs_max(self) -> float:
        """Largest entry magnitude across all slots and workers (quantizer range aid)."""
        peak = 0.0
        for row in self._data:
            for d in row:
                peak = max(peak, float(np.max(np.abs(d.a))), float(np.max(np.abs(d.b))))
        return peak


# -- pure helpers shared with the protocol engine ---------------------------


def local_gradient(data: LocalData, xc: np.ndarray, ginfo: np.ndarray, mu: float) -> np.ndarray:
    """Partial gradient A^T (A x^c - b + ginfo) + mu x^c for one worker's block."""
    x = np.asarray(xc, dtype=float)
    g = np.asarray(ginfo, dtype=float)
    if x.shape[0] != data.a.shape[1]:
        raise ContractError(f"block dim {x.shape[0]} does not match data dim {data.a.shape[1]}")
    if g.shape[0] != data.b.shape[0]:
        raise ContractError(f"aggregate dim {g.shape[0]} does not match target dim {data.b.shape[0]}")
    return data.a.T @ (data.a @ x - data.b + g) + mu * x


def cross_term(pairs: list, target_dim: int) -> np.ndarray:
    """Aggregate sum (A^l x^l - b^l) over the given (data, block) pairs.

    An empty list yields the zero vector (single-worker degenerate case).
    """
    out = np.zeros(target_dim)
    for data, block in pairs:
        x = np.asarray(block, dtype=float)
        if x.shape[0] != data.a.shape[1]:
            raise ContractError("block does not match its data matrix")
        out += data.a @ x - data.b
    return out


# -- generation -------------------------------------------------------------


def _scaled_coupling(rng: np.random.Generator, m: int, n_c: int, a_max: float) -> np.ndarray:
    a = rng.normal(size=(m, n_c))
    top = np.linalg.norm(a, 2)
    scale = a_max * rng.uniform(0.6, 1.0)
    return a * (scale / top)


def build_scenario(spec: ScenarioSpec) -> CostScenario:
    """Generate the full horizon of data deterministically from the recipe seed.

    Coupling matrices are drawn once per worker (spectral norm capped by
    a_max) and held fixed; only the target shares drift. Draws happen in slot
    order, so extending the horizon extends the same data stream: the first T
    slots agree with those of any shorter-horizon build of the same spec.
    """
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, spec.workers)))
    mats = [_scaled_coupling(rng, spec.target_dim, d, spec.a_max) for d in spec.block_dims]
    shares = [rng.normal(scale=spec.b_scale, size=spec.target_dim) for _ in range(spec.workers)]
    data: list[list[LocalData]] = []
    for t in range(1, spec.horizon + 1):
        if t > 1:
            step = spec.drift.step_norm(t)
            if step > 0.0:
                for c in range(spec.workers):
                    direction = rng.normal(size=spec.target_dim)
                    direction /= np.linalg.norm(direction)
                    shares[c] = shares[c] + step * direction
        data.append([LocalData(mats[c], shares[c].copy()) for c in range(spec.workers)])
    return CostScenario(spec, data, _feasible_from_spec(spec))


def _feasible_from_spec(spec: ScenarioSpec) -> FeasibleSet:
    from .geometry import Ball, Box

    blocks = []
    for d in spec.block_dims:
        if spec.feasible_kind == "ball":
            blocks.append(Ball(np.zeros(d), spec.feasible_size))
        elif spec.feasible_kind == "box":
            blocks.append(Box(-spec.feasible_size * np.ones(d), spec.feasible_size * np.ones(d)))
        else:
            raise ValueError(f"unknown feasible-set kind {spec.feasible_kind!r}")
    return FeasibleSet(tuple(blocks))
