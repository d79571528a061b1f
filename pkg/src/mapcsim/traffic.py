"""Downlink traffic generation and per-STA FIFO queues.

Both arrival models target the same long-run packet rate omega/L:

* Poisson -- exponential inter-arrivals at rate omega/L packets/s.
* Bursty  -- an autonomous ON/OFF process in absolute time with
  exponential dwells (means T_on, T_off); arrivals occur only during ON
  periods, at rate (omega/L) * (T_on + T_off) / T_on, so the process
  carries the packets an always-on Poisson source would have produced.

Streams are materialized lazily, one independent RNG stream per STA. RNG
consumption is tied to the process itself (arrival ordinals and dwell
windows), never to the caller's query windows, so a traffic realization
depends only on its seed -- two runs that poll at different times see the
same packets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POISSON = "poisson"
BURSTY = "bursty"


@dataclass
class TrafficProfile:
    model: str  # POISSON or BURSTY
    load_bps: float  # omega, offered load in bits/s
    frame_bits: int = 12000
    on_mean_s: float = 1e-3  # bursty ON dwell mean
    off_mean_s: float = 10e-3  # bursty OFF dwell mean

    def validate(self) -> None:
        if self.model not in (POISSON, BURSTY):
            raise ValueError(f"unknown traffic model {self.model!r}")
        if self.load_bps <= 0 or self.frame_bits <= 0:
            raise ValueError("load and frame size must be positive")
        if self.model == BURSTY and (self.on_mean_s <= 0 or self.off_mean_s <= 0):
            raise ValueError("bursty dwell means must be positive")

    @property
    def packet_rate(self) -> float:
        return self.load_bps / self.frame_bits


class ArrivalStream:
    """Lazy, stateful arrival generator for one STA.

    arrivals_in(t0, t1) returns the sorted timestamps in [t0, t1); query
    windows must be contiguous and nondecreasing. peek_next() exposes the
    next pending arrival so an idle simulation can fast-forward without
    stepping through empty windows.
    """

    _GAP_CHUNK = 1024

    def __init__(self, profile: TrafficProfile, rng: np.random.Generator):
        profile.validate()
        self.profile = profile
        self.rng = rng
        self._pending: list[float] = []  # generated, not yet consumed, sorted
        self.total_on_time = 0.0  # bursty diagnostic
        self.generated_count = 0
        if profile.model == POISSON:
            self._gaps = np.empty(0)
            self._gap_i = 0
            self._next_t = self._draw_gap()  # first arrival
        else:
            # Start in an OFF dwell; the transient is negligible against any
            # horizon long enough for rate statistics.
            self._on = False
            self._window_start = 0.0
            self._window_end = float(rng.exponential(profile.off_mean_s))

    def _draw_gap(self) -> float:
        if self._gap_i >= len(self._gaps):
            self._gaps = self.rng.exponential(1.0 / self.profile.packet_rate, size=self._GAP_CHUNK)
            self._gap_i = 0
        g = float(self._gaps[self._gap_i])
        self._gap_i += 1
        return g

    def _extend_poisson(self, target: float) -> None:
        while self._next_t < target:
            self._pending.append(self._next_t)
            self._next_t += self._draw_gap()

    def _realize_dwell(self) -> None:
        """Materialize the current ON/OFF window fully and enter the next."""
        p = self.profile
        if self._on:
            length = self._window_end - self._window_start
            on_rate = p.packet_rate * (p.on_mean_s + p.off_mean_s) / p.on_mean_s
            count = int(self.rng.poisson(on_rate * length))
            if count:
                pts = np.sort(self.rng.uniform(self._window_start, self._window_end, size=count))
                self._pending.extend(pts.tolist())
            self.total_on_time += length
        self._on = not self._on
        self._window_start = self._window_end
        dwell = p.on_mean_s if self._on else p.off_mean_s
        self._window_end += float(self.rng.exponential(dwell))

    def _extend_bursty(self, target: float) -> None:
        while self._window_start < target:
            self._realize_dwell()

    def _extend(self, target: float) -> None:
        if self.profile.model == POISSON:
            self._extend_poisson(target)
        else:
            self._extend_bursty(target)

    def arrivals_in(self, t0: float, t1: float) -> np.ndarray:
        """Timestamps in [t0, t1); t0 must not precede already-consumed time."""
        if t1 < t0:
            raise ValueError("window end precedes start")
        self._extend(t1)
        cut = 0
        pending = self._pending
        while cut < len(pending) and pending[cut] < t1:
            cut += 1
        out, self._pending = pending[:cut], pending[cut:]
        self.generated_count += len(out)
        return np.asarray(out, dtype=float)

    def peek_next(self) -> float:
        """Next arrival timestamp not yet returned by arrivals_in."""
        if self.profile.model == POISSON:
            return self._pending[0] if self._pending else self._next_t
        while not self._pending:
            self._realize_dwell()
        return self._pending[0]


class StaQueue:
    """Bounded FIFO of arrival timestamps on a ring buffer.

    Head timestamp is the HoL packet's arrival; length is the occupancy.
    Overflowing arrivals are dropped and counted, never enqueued.
    """

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf = np.empty(capacity, dtype=float)
        self._head = 0
        self._len = 0
        self.drop_count = 0
        self.delivered_count = 0
        self.enqueued_count = 0

    def __len__(self) -> int:
        return self._len

    @property
    def hol_timestamp(self) -> float | None:
        if self._len == 0:
            return None
        return float(self._buf[self._head])

    def enqueue(self, timestamps: np.ndarray) -> None:
        """Append sorted timestamps (>= current tail); overflow is dropped."""
        n = len(timestamps)
        if n == 0:
            return
        room = self.capacity - self._len
        kept = min(n, room)
        self.drop_count += n - kept
        self.enqueued_count += kept
        if kept == 0:
            return
        start = (self._head + self._len) % self.capacity
        idx = (start + np.arange(kept)) % self.capacity
        self._buf[idx] = timestamps[:kept]
        self._len += kept

    def dequeue_delivered(self, delivered: int, now: float) -> np.ndarray:
        """Remove the `delivered` oldest frames; return their delays at `now`.

        Removal clamps at the queue length; frames beyond the clamp (and
        frames that fail decoding, which are never dequeued) stay in place
        with their original timestamps.
        """
        if delivered < 0:
            raise ValueError("delivered count must be >= 0")
        take = min(delivered, self._len)
        if take == 0:
            return np.empty(0, dtype=float)
        idx = (self._head + np.arange(take)) % self.capacity
        delays = now - self._buf[idx]
        self._head = (self._head + take) % self.capacity
        self._len -= take
        self.delivered_count += take
        return delays

    def timestamps(self) -> np.ndarray:
        """Snapshot of queued arrival timestamps, oldest first."""
        idx = (self._head + np.arange(self._len)) % self.capacity
        return self._buf[idx].copy()
