"""Deterministic time-slotted message fabric between workers and master.

A link holds envelopes in FIFO send order and releases each one exactly at
send_slot + delay. Within a slot the simulation driver always performs
deliveries first, then algorithm steps, then sends.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .compression import CompressedData
from .errors import ContractError


@dataclass(frozen=True)
class DelayConfig:
    """Uplink / downlink / local data-acquisition delays, in whole slots."""

    tau_u: int = 1
    tau_d: int = 0
    tau_l: int = 0

    def __post_init__(self):
        for name in ("tau_u", "tau_d", "tau_l"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.round_trip < 1:
            raise ValueError("the round trip tau_u + tau_d must be at least 1 slot")

    @property
    def round_trip(self) -> int:
        return self.tau_u + self.tau_d

    @property
    def total(self) -> int:
        return self.tau_l + self.round_trip


@dataclass(frozen=True)
class UplinkPayload:
    """Worker-to-master message: the executed block plus encoded local data.

    ``blob`` is None during early slots when the worker has not yet acquired
    any data (only possible under a positive local delay).
    """

    worker: int
    decision: np.ndarray
    blob: CompressedData | None


@dataclass(frozen=True)
class DownlinkPayload:
    """Master-to-worker message: warm-started block and the cross-worker aggregate."""

    worker: int
    intermediate: np.ndarray
    ginfo: np.ndarray


@dataclass(frozen=True)
class Envelope:
    send_slot: int
    deliver_slot: int
    payload: object


@dataclass
class Link:
    """One direction of communication with a fixed whole-slot delay."""

    delay: int
    _queue: deque = field(default_factory=deque, repr=False)
    sent: int = 0
    delivered: int = 0

    def __post_init__(self):
        if not isinstance(self.delay, int) or self.delay < 0:
            raise ValueError(f"link delay must be a nonnegative integer, got {self.delay!r}")

    def send(self, t: int, payload) -> None:
        if t < 1:
            raise ContractError(f"slots are 1-based, got send slot {t}")
        self._queue.append(Envelope(t, t + self.delay, payload))
        self.sent += 1

    def deliver(self, t: int) -> list:
        """Pop and return the payloads due at slot t, in FIFO send order."""
        if t < 1:
            raise ContractError(f"slots are 1-based, got deliver slot {t}")
        out = []
        while self._queue and self._queue[0].deliver_slot <= t:
            env = self._queue.popleft()
            if env.deliver_slot < t:
                raise ContractError(
                    f"envelope due at slot {env.deliver_slot} was never collected (now {t})"
                )
            out.append(env.payload)
        self.delivered += len(out)
        return out

    @property
    def in_flight(self) -> int:
        return len(self._queue)
