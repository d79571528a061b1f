"""Discrete-event MAC engine: DCF contention among APs, the coordination
TXOP sequence and its timing, AMPDU sizing, binomial frame delivery, and
episode advancement.

One TXOP, after a contention win, spends

    ICF + SIFS + ICR + SIFS + TF + SIFS + <data window> + SIFS + BACK + DIFS

on air; the data window is always the full configured TXOP duration (a
member with a short queue simply sends fewer frames). A collision (two or
more APs drawing the same minimum backoff) costs the response timeout
ICF + SIFS + ICR + DIFS + slot, after which the colliding APs double their
contention window and redraw.

The engine advances in decision points: it contends, resolves collisions,
fast-forwards idle periods, and hands a `SchedulerState` snapshot to
whoever picks the SR group (a heuristic or an external agent), then
executes the chosen TXOP. All randomness flows through one Generator per
episode, so a (seed, config, scheduler) triple is fully reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import PhyParams
from .groups import GroupCatalog
from .traffic import ArrivalStream, StaQueue


@dataclass
class MacParams:
    """Frame timings in seconds plus DCF contention parameters."""

    t_icf: float = 74.4e-6
    t_icr: float = 88e-6
    t_tf: float = 74.4e-6
    t_back: float = 100e-6
    t_sifs: float = 16e-6
    t_difs: float = 34e-6
    t_slot: float = 9e-6  # empty backoff slot
    cw_min: int = 15
    cw_max: int = 1023
    txop_duration: float = 5e-3  # fixed data window per successful TXOP

    def validate(self) -> None:
        if self.cw_min > self.cw_max:
            raise ValueError("cw_min must not exceed cw_max")
        for name in ("t_icf", "t_icr", "t_tf", "t_back", "t_sifs", "t_difs", "t_slot", "txop_duration"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def collision_penalty(p: MacParams) -> float:
    """Response timeout burned by a collision, in seconds."""
    return p.t_icf + p.t_sifs + p.t_icr + p.t_difs + p.t_slot


def txop_overhead(p: MacParams) -> float:
    """Non-data airtime of a successful TXOP, in seconds."""
    return p.t_icf + p.t_icr + p.t_tf + p.t_back + 4.0 * p.t_sifs + p.t_difs


def ampdu_size(rate_bps: float, t_data: float, queue_len: int, frame_bits: int) -> int:
    """Frames aggregated for one member: airtime-limited, capped by queue."""
    if t_data <= 0:
        raise ValueError("data window must be positive")
    return min(int(queue_len), int(t_data * rate_bps / frame_bits))


class ContentionState:
    """Per-AP DCF backoff counters with the doubling CW ladder."""

    def __init__(self, ap_count: int, p: MacParams, rng: np.random.Generator):
        self.p = p
        self.cw = np.full(ap_count, p.cw_min, dtype=np.int64)
        self.backoff = rng.integers(0, self.cw + 1)

    def contend(self) -> tuple[int | None, list[int], int]:
        """Let counters run down; returns (winner, colliders, elapsed slots).

        The minimum counter wins after that many idle slots; a shared
        minimum is a collision. Losers keep their residual backoff.
        """
        elapsed = int(self.backoff.min())
        self.backoff -= elapsed
        at_zero = np.flatnonzero(self.backoff == 0)
        if len(at_zero) == 1:
            return int(at_zero[0]), [], elapsed
        return None, [int(a) for a in at_zero], elapsed

    def after_win(self, winner: int, rng: np.random.Generator) -> None:
        self.cw[winner] = self.p.cw_min
        self.backoff[winner] = rng.integers(0, self.cw[winner] + 1)

    def after_collision(self, colliders: list[int], rng: np.random.Generator) -> None:
        for ap in colliders:
            self.cw[ap] = min(2 * self.cw[ap] + 1, self.p.cw_max)
            self.backoff[ap] = rng.integers(0, self.cw[ap] + 1)


@dataclass
class TxopOutcome:
    sharing_ap: int
    action: int | None
    member_stas: tuple[int, ...]
    sent: tuple[int, ...]  # U per member
    delivered: tuple[int, ...]  # mu per member
    delays: list[np.ndarray]  # per member, per delivered frame
    airtime: float  # contention + overhead + data window
    t_end: float
    collided: bool = False


def run_txop(
    group,
    queues: list[StaQueue],
    mac: MacParams,
    phy: PhyParams,
    rng: np.random.Generator,
    now: float,
    sharing_ap: int,
    action: int | None = None,
    contention_time: float = 0.0,
) -> TxopOutcome:
    """Execute one coordinated TXOP for an admitted group.

    Every member sends U = min(queue, floor(t_data * rate / L)) frames;
    deliveries are Binomial(U, 1 - PER) at the operating PER, dequeued from
    the head with delays stamped at the TXOP end. Failed frames stay put.
    """
    if all(len(queues[sta]) == 0 for sta in group.stas):
        raise ValueError("group has no pending packets; must be masked upstream")
    t_data = mac.txop_duration
    t_end = now + txop_overhead(mac) + t_data
    q_success = 1.0 - phy.operating_per
    sent, delivered, delays = [], [], []
    for m, (_, sta) in enumerate(group.members):
        u = ampdu_size(group.rate_concurrent[m], t_data, len(queues[sta]), phy.frame_bits)
        mu = int(rng.binomial(u, q_success)) if u > 0 else 0
        sent.append(u)
        delivered.append(mu)
        delays.append(queues[sta].dequeue_delivered(mu, t_end))
    return TxopOutcome(
        sharing_ap=sharing_ap,
        action=action,
        member_stas=group.stas,
        sent=tuple(sent),
        delivered=tuple(delivered),
        delays=delays,
        airtime=contention_time + txop_overhead(mac) + t_data,
        t_end=t_end,
    )


@dataclass
class EpisodeResult:
    trace: list[dict]
    delays_per_sta: list[np.ndarray]
    arrivals: np.ndarray  # consumed by the episode, per STA
    delivered: np.ndarray
    dropped: np.ndarray
    residual: np.ndarray
    txop_count: int
    collision_count: int
    duration: float


class Episode:
    """One simulated episode: frozen world + queues + the event loop.

    Drive it either with `advance_to_decision()` / `execute(action)` (the
    environment protocol does) or via `advance_episode` with a scheduler
    callback. Both paths share every random draw.
    """

    def __init__(
        self,
        catalog: GroupCatalog,
        serving_gain: np.ndarray,
        streams: list[ArrivalStream],
        mac: MacParams,
        phy: PhyParams,
        t_sim: float,
        rng: np.random.Generator,
        ap_count: int | None = None,
        queue_capacity: int = 10_000,
    ):
        mac.validate()
        if len(streams) != catalog.sta_count:
            raise ValueError("one arrival stream per STA required")
        self.catalog = catalog
        self.serving_gain = np.asarray(serving_gain, dtype=float)
        self.streams = streams
        self.mac = mac
        self.phy = phy
        self.t_sim = t_sim
        self.rng = rng
        if ap_count is None:
            ap_count = int(catalog.member_ap.max()) + 1
        self.contention = ContentionState(ap_count, mac, rng)
        self.queues = [StaQueue(queue_capacity) for _ in range(catalog.sta_count)]
        # Per-group per-member frame capacity of one data window.
        self.txop_capacity = np.floor(
            mac.txop_duration * catalog.rate_concurrent / phy.frame_bits
        ).astype(np.int64)
        self.now = 0.0
        self.trace: list[dict] = []
        self.txop_count = 0
        self.collision_count = 0
        self._pulled_to = 0.0
        self._pending_winner: int | None = None
        self._pending_contention: float = 0.0
        self._pending_collisions: int = 0
        self._delay_chunks: list[list[np.ndarray]] = [[] for _ in range(catalog.sta_count)]
        self._done = False

    # -- state snapshots ---------------------------------------------------

    def queue_lengths(self) -> np.ndarray:
        return np.array([len(q) for q in self.queues], dtype=np.int64)

    def hol_timestamps(self) -> np.ndarray:
        """Per-STA HoL arrival time, NaN where the queue is empty."""
        out = np.full(self.catalog.sta_count, np.nan)
        for i, q in enumerate(self.queues):
            ts = q.hol_timestamp
            if ts is not None:
                out[i] = ts
        return out

    def _replenish(self, t: float) -> None:
        if t <= self._pulled_to:
            return
        for sta, stream in enumerate(self.streams):
            self.queues[sta].enqueue(stream.arrivals_in(self._pulled_to, t))
        self._pulled_to = t

    def sync_arrivals(self) -> None:
        """Make arrivals up to the current clock visible in the queues."""
        self._replenish(self.now)

    # -- event loop ----------------------------------------------------------

    def advance_to_decision(self):
        """Run contention (resolving collisions and idle gaps) until an AP
        wins with traffic pending; returns a SchedulerState or None when the
        simulation horizon is reached."""
        from .schedulers import SchedulerState, online_mask

        if self._done:
            return None
        if self._pending_winner is not None:
            raise RuntimeError("previous decision not yet executed")
        while True:
            if self.now >= self.t_sim:
                self._done = True
                return None
            self._replenish(self.now)
            if not any(len(q) for q in self.queues):
                t_next = min(s.peek_next() for s in self.streams)
                if t_next >= self.t_sim:
                    self._done = True
                    return None
                self.now = t_next
                # Half-open arrival windows: nudge past t_next so the
                # packet arriving exactly there is picked up.
                self._replenish(np.nextafter(t_next, np.inf))
                continue
            winner, colliders, elapsed = self.contention.contend()
            self.now += elapsed * self.mac.t_slot
            self._replenish(self.now)
            if winner is None:
                self.trace.append(
                    {
                        "t": self.now,
                        "collided": True,
                        "colliders": colliders,
                        "winner": None,
                        "action": None,
                    }
                )
                self.now += collision_penalty(self.mac)
                self.contention.after_collision(colliders, self.rng)
                self.collision_count += 1
                self._pending_collisions += 1
                self._replenish(self.now)
                continue
            self._pending_winner = winner
            self._pending_contention = elapsed * self.mac.t_slot
            lengths = self.queue_lengths()
            return SchedulerState(
                now=self.now,
                queue_len=lengths,
                hol_ts=self.hol_timestamps(),
                serving_gain=self.serving_gain,
                catalog=self.catalog,
                mask=online_mask(self.catalog, lengths),
                txop_capacity=self.txop_capacity,
            )

    def _priority_rank(self, action: int, hol_ts: np.ndarray, queue_len: np.ndarray) -> float:
        """Rank of the selected group's oldest active member among the
        HoL delays of all backlogged STAs, in [0, 1] (1 = oldest)."""
        backlogged = queue_len > 0
        group = self.catalog.groups[action]
        active_ts = [hol_ts[s] for s in group.stas if backlogged[s]]
        oldest = min(active_ts)
        all_ts = hol_ts[backlogged]
        if len(all_ts) <= 1:
            return 1.0
        # Oldest arrival = largest delay; rank by how many it is older than.
        return float(np.sum(all_ts >= oldest) - 1) / float(len(all_ts) - 1)

    def execute(self, action: int) -> tuple[TxopOutcome, dict]:
        """Run the pending TXOP with the selected group."""
        if self._pending_winner is None:
            raise RuntimeError("no pending decision; call advance_to_decision first")
        if not 0 <= action < len(self.catalog):
            raise IndexError(f"action {action} out of range")
        hol_before = self.hol_timestamps()
        lengths = self.queue_lengths()
        rank = self._priority_rank(action, hol_before, lengths)
        outcome = run_txop(
            self.catalog.groups[action],
            self.queues,
            self.mac,
            self.phy,
            self.rng,
            self.now,
            sharing_ap=self._pending_winner,
            action=action,
            contention_time=self._pending_contention,
        )
        for m, sta in enumerate(outcome.member_stas):
            if len(outcome.delays[m]):
                self._delay_chunks[sta].append(outcome.delays[m])
        record = {
            "t": self.now,
            "t_end": outcome.t_end,
            "winner": outcome.sharing_ap,
            "collided": False,
            "collisions_before": self._pending_collisions,
            "action": action,
            "stas": [int(s) for s in outcome.member_stas],
            "sent": [int(u) for u in outcome.sent],
            "delivered": [int(mu) for mu in outcome.delivered],
            "airtime": outcome.airtime,
            "priority_rank": rank,
        }
        self.trace.append(record)
        self.txop_count += 1
        self.contention.after_win(self._pending_winner, self.rng)
        self.now = outcome.t_end
        self._pending_winner = None
        self._pending_contention = 0.0
        self._pending_collisions = 0
        return outcome, record

    # -- results ---------------------------------------------------------------

    def result(self) -> EpisodeResult:
        delays = [
            np.concatenate(chunks) if chunks else np.empty(0)
            for chunks in self._delay_chunks
        ]
        return EpisodeResult(
            trace=self.trace,
            delays_per_sta=delays,
            arrivals=np.array([s.generated_count for s in self.streams], dtype=np.int64),
            delivered=np.array([q.delivered_count for q in self.queues], dtype=np.int64),
            dropped=np.array([q.drop_count for q in self.queues], dtype=np.int64),
            residual=self.queue_lengths(),
            txop_count=self.txop_count,
            collision_count=self.collision_count,
            duration=self.now,
        )


def advance_episode(episode: Episode, scheduler) -> EpisodeResult:
    """Drive a whole episode with an in-process scheduler callback."""
    while (state := episode.advance_to_decision()) is not None:
        episode.execute(scheduler(state))
    return episode.result()


def write_trace_jsonl(path, trace: list[dict]) -> None:
    with open(path, "w") as fh:
        for rec in trace:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
