"""Episode metrics: per-packet delay percentiles, the worst-tail summary,
the overload discard rule, and selection-priority histograms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mac import EpisodeResult

DISCARD_THRESHOLD_S = 0.100  # an episode counts only if some scheduler beats this


def percentile(samples, p: float) -> float | None:
    """Nearest-rank percentile on sorted samples; None when empty.

    rank = ceil(p/100 * n), 1-based on the ascending sort.
    """
    if not 0 < p < 100:
        raise ValueError("p must be in (0, 100)")
    arr = np.sort(np.asarray(samples, dtype=float))
    if arr.size == 0:
        return None
    rank = math.ceil(p / 100.0 * arr.size)
    return float(arr[rank - 1])


@dataclass
class EpisodeMetrics:
    per_sta_p99: list[float | None]  # None: nothing delivered and nothing offered
    worst_p99: float  # inf marks a starved STA (offered traffic, zero deliveries)
    mean_delay: float | None
    delay_count: int
    priority_hist: list[float]
    txop_count: int
    collision_count: int


def worst_tail_delay(delays_per_sta: list[np.ndarray], arrivals: np.ndarray, p: float = 99.0):
    """Per-STA tail percentile and its maximum.

    A STA that was offered traffic but delivered nothing has an unbounded
    tail (inf); STAs with no traffic at all are skipped.
    """
    per_sta: list[float | None] = []
    worst = 0.0
    for sta, delays in enumerate(delays_per_sta):
        if len(delays) == 0:
            if arrivals[sta] > 0:
                per_sta.append(float("inf"))
                worst = float("inf")
            else:
                per_sta.append(None)
            continue
        v = percentile(delays, p)
        per_sta.append(v)
        worst = max(worst, v)
    return per_sta, worst


def priority_histogram(trace: list[dict], bins: int = 5) -> list[float]:
    """Normalized selection frequency per priority bin (low..high).

    Each successful TXOP lands in the quantile bin of its recorded
    priority rank; frequencies sum to 1 over a nonempty trace.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts = np.zeros(bins, dtype=float)
    total = 0
    for rec in trace:
        if rec.get("action") is None:
            continue
        rank = rec["priority_rank"]
        counts[min(int(rank * bins), bins - 1)] += 1
        total += 1
    if total == 0:
        return counts.tolist()
    return (counts / total).tolist()


def compute_metrics(result: EpisodeResult, bins: int = 5) -> EpisodeMetrics:
    per_sta, worst = worst_tail_delay(result.delays_per_sta, result.arrivals)
    all_delays = (
        np.concatenate([d for d in result.delays_per_sta if len(d)])
        if any(len(d) for d in result.delays_per_sta)
        else np.empty(0)
    )
    return EpisodeMetrics(
        per_sta_p99=per_sta,
        worst_p99=worst,
        mean_delay=float(all_delays.mean()) if all_delays.size else None,
        delay_count=int(all_delays.size),
        priority_hist=priority_histogram(result.trace, bins),
        txop_count=result.txop_count,
        collision_count=result.collision_count,
    )


def discard_rule(worst_p99_by_scheduler: dict[str, float]) -> bool:
    """True = keep the realization: some scheduler's worst tail delay is
    strictly below the threshold. Run every scheduler on the identical
    realization (same seeds) before applying this."""
    if not worst_p99_by_scheduler:
        raise ValueError("discard rule needs at least one scheduler result")
    return min(worst_p99_by_scheduler.values()) < DISCARD_THRESHOLD_S
