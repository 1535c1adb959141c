"""Feasible sets, projections, and the single projected-gradient-step primitive.

Per-worker constraint sets are restricted to Euclidean balls and axis-aligned
boxes so that projections (and hence the per-step subproblems) are solved in
closed form. The global feasible set is the Cartesian product of the
per-worker sets; its diameter and norm supremum are computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ContractError(f"expected a 1-D vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class Ball:
    """Euclidean ball { x : ||x - center|| <= radius }."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def norm_sup_sq(self) -> float:
        # sup ||x||^2 over the ball, attained along the center direction
        return (np.linalg.norm(self.center) + self.radius) ** 2

    def project(self, point: np.ndarray) -> np.ndarray:
        p = _as_vector(point)
        if p.shape[0] != self.dim:
            raise ContractError(f"point has dim {p.shape[0]}, set has dim {self.dim}")
        d = p - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return p.copy()
        return self.center + d * (self.radius / r)

    def contains(self, point: np.ndarray, tol: float = 1e-9) -> bool:
        p = _as_vector(point)
        return np.linalg.norm(p - self.center) <= self.radius * (1.0 + tol) + tol

    def is_interior(self, point: np.ndarray, margin: float = 1e-12) -> bool:
        p = _as_vector(point)
        return np.linalg.norm(p - self.center) < self.radius - margin

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        # uniform in the ball: uniform direction, radius scaled by u^(1/d)
        g = rng.normal(size=self.dim)
        g /= np.linalg.norm(g)
        u = rng.uniform()
        return self.center + self.radius * u ** (1.0 / self.dim) * g

    def sample_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        g = rng.normal(size=(count, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.uniform(size=(count, 1)) ** (1.0 / self.dim)
        return self.center + self.radius * u * g


@dataclass(frozen=True)
class Box:
    """Axis-aligned box { x : lower <= x <= upper } (componentwise)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_vector(self.lower))
        object.__setattr__(self, "upper", _as_vector(self.upper))
        if self.lower.shape != self.upper.shape:
            raise ContractError("box bounds have mismatched shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("box requires lower <= upper componentwise")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def norm_sup_sq(self) -> float:
        # per-coordinate maximum modulus; exact for a box
        return float(np.sum(np.maximum(self.lower**2, self.upper**2)))

    def project(self, point: np.ndarray) -> np.ndarray:
        p = _as_vector(point)
        if p.shape[0] != self.dim:
            raise ContractError(f"point has dim {p.shape[0]}, set has dim {self.dim}")
        return np.clip(p, self.lower, self.upper)

    def contains(self, point: np.ndarray, tol: float = 1e-9) -> bool:
        p = _as_vector(point)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def is_interior(self, point: np.ndarray, margin: float = 1e-12) -> bool:
        p = _as_vector(point)
        return bool(np.all(p > self.lower + margin) and np.all(p < self.upper - margin))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def sample_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))


@dataclass(frozen=True)
class FeasibleSet:
    """Cartesian product of per-worker sets, ordered by worker index.

    Exposes both blockwise operations (used by the slot protocol) and
    whole-vector helpers over the concatenated decision.
    """

    blocks: tuple
    offsets: tuple = field(init=False)

    def __post_init__(self):
        if len(self.blocks) < 1:
            raise ValueError("at least one worker set is required")
        object.__setattr__(self, "blocks", tuple(self.blocks))
        offs = np.concatenate([[0], np.cumsum([b.dim for b in self.blocks])])
        object.__setattr__(self, "offsets", tuple(int(o) for o in offs))

    @property
    def num_workers(self) -> int:
        return len(self.blocks)

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    def block_dim(self, worker: int) -> int:
        return self.blocks[worker].dim

    @property
    def diameter(self) -> float:
        """Exact diameter of the product set (blocks are orthogonal coordinates)."""
        return float(np.sqrt(sum(b.diameter**2 for b in self.blocks)))

    @property
    def norm_sup(self) -> float:
        """Exact sup of the Euclidean norm over the product set."""
        return float(np.sqrt(sum(b.norm_sup_sq for b in self.blocks)))

    def _check_worker(self, worker: int):
        if not 0 <= worker < self.num_workers:
            raise ContractError(f"worker index {worker} out of range [0, {self.num_workers})")

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        v = _as_vector(x)
        if v.shape[0] != self.dim:
            raise ContractError(f"vector has dim {v.shape[0]}, product set has dim {self.dim}")
        return [v[self.offsets[c] : self.offsets[c + 1]] for c in range(self.num_workers)]

    def concat(self, blocks) -> np.ndarray:
        if len(blocks) != self.num_workers:
            raise ContractError("one block per worker is required")
        parts = []
        for c, b in enumerate(blocks):
            v = _as_vector(b)
            if v.shape[0] != self.block_dim(c):
                raise ContractError(f"block {c} has dim {v.shape[0]}, expected {self.block_dim(c)}")
            parts.append(v)
        return np.concatenate(parts)

    def project_block(self, worker: int, point: np.ndarray) -> np.ndarray:
        self._check_worker(worker)
        return self.blocks[worker].project(point)

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.concat([self.project_block(c, b) for c, b in enumerate(self.split(x))])

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return all(self.blocks[c].contains(b, tol) for c, b in enumerate(self.split(x)))

    def is_interior(self, x: np.ndarray, margin: float = 1e-12) -> bool:
        return all(self.blocks[c].is_interior(b, margin) for c, b in enumerate(self.split(x)))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([b.sample(rng) for b in self.blocks])

    def sample_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.hstack([b.sample_many(rng, count) for b in self.blocks])

    def sample_block(self, worker: int, rng: np.random.Generator) -> np.ndarray:
        self._check_worker(worker)
        return self.blocks[worker].sample(rng)


def uniform_set(num_workers: int, kind: str, dim: int, size: float) -> FeasibleSet:
    """Build a homogeneous product set: per-worker ball of radius ``size``
    centered at the origin, or box [-size, size]^dim."""
    if kind == "ball":
        block = Ball(np.zeros(dim), float(size))
    elif kind == "box":
        block = Box(-size * np.ones(dim), size * np.ones(dim))
    else:
        raise ValueError(f"unknown feasible-set kind {kind!r}")
    return FeasibleSet(tuple(block for _ in range(num_workers)))


def gradient_step(feasible: FeasibleSet, worker: int, y: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    """One projected gradient step for worker ``worker``: project(y - g/alpha).

    This is the unique minimizer of
    <g, x - y> + (alpha/2) ||x - y||^2 over the worker's set,
    the strongly convex per-step subproblem both tiers solve.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    yv = _as_vector(y)
    gv = _as_vector(g)
    if yv.shape != gv.shape:
        raise ContractError(f"gradient shape {gv.shape} does not match iterate shape {yv.shape}")
    return feasible.project_block(worker, yv - gv / alpha)
