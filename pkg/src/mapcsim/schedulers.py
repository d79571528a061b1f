"""TXOP scheduling policies invoked once per contention win.

Three heuristics operate on the same per-decision snapshot:

* mnp -- most schedulable packets: maximize the frames the group can
  actually move this TXOP (queue lengths capped by per-member capacity).
* op  -- oldest packet first: among groups containing the STA with the
  largest HoL delay, move the most packets.
* tat -- delay-alignment tracker: among groups containing that same
  oldest-HoL STA, clear the largest age-weighted backlog, so one TXOP
  relieves delay where it is actually accumulating instead of merely
  moving volume.

A naive alternative reading of alignment -- minimize the HoL arrival-time
spread among served members (see `alignment_spread`) -- degenerates: the
spread is monotone under member inclusion, so its argmin is always a
single-member group and every TXOP serves one STA. That forfeits spatial
reuse entirely and is strictly dominated at load; the age-weighted rule
above is what makes the tracker competitive.

The fourth name, `external`, is not a callback: decisions are deferred to
an external agent through the environment protocol (see mapcsim.env).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import GroupCatalog


@dataclass
class SchedulerState:
    """Snapshot handed to a policy at one decision point."""

    now: float
    queue_len: np.ndarray  # (N,) frames waiting per STA
    hol_ts: np.ndarray  # (N,) HoL arrival time, NaN when empty
    serving_gain: np.ndarray  # (N,) linear serving-link gain
    catalog: GroupCatalog
    mask: np.ndarray  # (Z,) bool, True = selectable
    txop_capacity: np.ndarray  # (Z, W) frames one data window can carry per member


def online_mask(catalog: GroupCatalog, queue_len: np.ndarray) -> np.ndarray:
    """A group is selectable iff at least one member has pending packets."""
    rho = np.where(
        catalog.member_valid, queue_len[np.maximum(catalog.member_sta, 0)], 0
    )
    return (rho > 0).any(axis=1)


def _schedulable_packets(state: SchedulerState) -> np.ndarray:
    """Frames each group would move this TXOP (queue capped by capacity)."""
    rho = np.where(
        state.catalog.member_valid,
        state.queue_len[np.maximum(state.catalog.member_sta, 0)],
        0,
    )
    return np.minimum(rho, state.txop_capacity).sum(axis=1)


def _require_selectable(state: SchedulerState) -> None:
    if not state.mask.any():
        raise ValueError("no selectable group (all queues empty?)")


def schedule_mnp(state: SchedulerState) -> int:
    """Max schedulable packets; ties go to the lowest action id."""
    _require_selectable(state)
    score = np.where(state.mask, _schedulable_packets(state), -1)
    return int(np.argmax(score))


def schedule_op(state: SchedulerState) -> int:
    """Serve the STA with the oldest HoL packet; among groups containing
    it, move the most packets (capacity is wasted otherwise)."""
    _require_selectable(state)
    delay = np.where(state.queue_len > 0, state.now - state.hol_ts, -np.inf)
    target = int(np.argmax(delay))  # first max = lowest STA index
    eligible = state.mask & state.catalog.contains_sta[:, target]
    score = np.where(eligible, _schedulable_packets(state), -1)
    return int(np.argmax(score))


def aged_backlog_cleared(state: SchedulerState) -> np.ndarray:
    """Per-group age-weighted service: sum over backlogged members of
    (frames movable this TXOP) x (HoL age)."""
    cat = state.catalog
    sta = np.maximum(cat.member_sta, 0)
    rho = np.where(cat.member_valid, state.queue_len[sta], 0)
    age = np.where(
        cat.member_valid & (rho > 0), state.now - state.hol_ts[sta], 0.0
    )
    return (np.minimum(rho, state.txop_capacity) * age).sum(axis=1)


def alignment_spread(hol_active: np.ndarray) -> float:
    """Spread of HoL arrival times over one group's backlogged members
    (zero for a single member). Diagnostic only; see the module docstring
    for why selection cannot minimize this directly."""
    arr = np.asarray(hol_active, dtype=float)
    if arr.size == 0:
        raise ValueError("spread undefined for a group with no backlogged member")
    return float(arr.max() - arr.min())


def schedule_tat(state: SchedulerState) -> int:
    """Serve the oldest HoL while clearing the largest age-weighted backlog.

    Among unmasked groups containing the max-HoL-delay STA, maximize
    `aged_backlog_cleared`; ties go to the lowest action id.
    """
    _require_selectable(state)
    delay = np.where(state.queue_len > 0, state.now - state.hol_ts, -np.inf)
    target = int(np.argmax(delay))
    eligible = state.mask & state.catalog.contains_sta[:, target]
    score = np.where(eligible, aged_backlog_cleared(state), -np.inf)
    return int(np.argmax(score))


HEURISTICS = {
    "mnp": schedule_mnp,
    "op": schedule_op,
    "tat": schedule_tat,
}

SCHEDULER_NAMES = (*HEURISTICS, "external")


def get_scheduler(name: str):
    """Resolve a heuristic by CLI/config name."""
    if name == "external":
        raise ValueError(
            "scheduler 'external' is not an in-process policy; serve the episode "
            "over the environment protocol (mapcsim serve-env) instead"
        )
    try:
        return HEURISTICS[name]
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {SCHEDULER_NAMES}") from None
