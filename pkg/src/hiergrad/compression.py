"""Data compression schemes applied to uplinked local data.

Three simple schemes: lossless pass-through, per-entry uniform quantization,
and seeded additive Gaussian noise. The recovery side mirrors each scheme
exactly, so the master's data estimate can be reproduced offline from
(scheme, worker, stamp, data) alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CompressedData:
    """Encoded local data in flight; ``stamp`` is the slot the data belongs to."""

    worker: int
    stamp: int
    scheme: str
    a_code: np.ndarray
    b_code: np.ndarray


@dataclass(frozen=True)
class IdentityCompression:
    """Lossless scheme: recover(compress(d)) == d exactly."""

    name = "identity"

    def compress(self, a: np.ndarray, b: np.ndarray, *, worker: int, stamp: int) -> CompressedData:
        return CompressedData(worker, stamp, self.name, a.copy(), b.copy())

    def recover(self, blob: CompressedData) -> tuple[np.ndarray, np.ndarray]:
        return blob.a_code.copy(), blob.b_code.copy()

    def describe(self) -> dict:
        return {"scheme": self.name}


@dataclass(frozen=True)
class UniformQuantizer:
    """Per-entry uniform quantization onto a fixed grid over [lo, hi].

    Grid pitch is (hi - lo) / 2**bits, so the per-entry recovery error is at
    most half a pitch for in-range values; values outside the range are
    clipped first.
    """

    bits: int
    lo: float
    hi: float
    name = "quantize"

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError(f"quantizer needs at least 1 bit, got {self.bits}")
        if not self.hi > self.lo:
            raise ValueError(f"quantizer range must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / 2**self.bits

    def _encode(self, values: np.ndarray) -> np.ndarray:
        clipped = np.clip(values, self.lo, self.hi)
        idx = np.rint((clipped - self.lo) / self.step)
        return np.clip(idx, 0, 2**self.bits).astype(np.int64)

    def _decode(self, codes: np.ndarray) -> np.ndarray:
        return self.lo + codes.astype(float) * self.step

    def compress(self, a: np.ndarray, b: np.ndarray, *, worker: int, stamp: int) -> CompressedData:
        return CompressedData(worker, stamp, self.name, self._encode(a), self._encode(b))

    def recover(self, blob: CompressedData) -> tuple[np.ndarray, np.ndarray]:
        return self._decode(blob.a_code), self._decode(blob.b_code)

    def describe(self) -> dict:
        return {"scheme": self.name, "bits": self.bits, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class GaussianNoise:
    """Additive Gaussian noise on the transmitted entries.

    The noise stream is derived from (seed, worker, stamp), so a fixed seed
    makes every message deterministic and reproducible offline.
    """

    std: float
    seed: int = 0
    name = "noise"

    def __post_init__(self):
        if self.std < 0:
            raise ValueError(f"noise std must be nonnegative, got {self.std}")

    def compress(self, a: np.ndarray, b: np.ndarray, *, worker: int, stamp: int) -> CompressedData:
        if self.std == 0.0:
            return CompressedData(worker, stamp, self.name, a.copy(), b.copy())
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, worker, stamp)))
        return CompressedData(
            worker,
            stamp,
            self.name,
            a + rng.normal(scale=self.std, size=a.shape),
            b + rng.normal(scale=self.std, size=b.shape),
        )

    def recover(self, blob: CompressedData) -> tuple[np.ndarray, np.ndarray]:
        return blob.a_code.copy(), blob.b_code.copy()

    def describe(self) -> dict:
        return {"scheme": self.name, "std": self.std, "seed": self.seed}


def make_scheme(spec: dict):
    """Build a scheme from a config mapping, e.g. {"scheme": "quantize", "bits": 8, ...}."""
    kind = spec.get("scheme", "identity")
    if kind == "identity":
        return IdentityCompression()
    if kind == "quantize":
        return UniformQuantizer(bits=spec["bits"], lo=spec["lo"], hi=spec["hi"])
    if kind == "noise":
        return GaussianNoise(std=spec.get("std", 0.0), seed=spec.get("seed", 0))
    raise ValueError(f"unknown compression scheme {kind!r}")
