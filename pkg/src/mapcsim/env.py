"""Episodic decision environment over the MAC engine.

Each episode is one simulated deployment + traffic realization. A decision
point is a successful contention with traffic pending; the agent (or a
heuristic run through the same interface) picks the SR group for that
TXOP. Observations are per-STA normalized features

    s = [hol_delay / T_sim  ||  queue / rho_max  ||  gain / h_max]  in [0,1]^{3N}

and the reward of a step combines an immediate shaping term with a
long-term pressure term:

  shaping   = min(hol_after) - min(hol_before)  when the system-oldest HoL
              packet was delivered this TXOP, else 0 (minima over
              backlogged STAs; an emptied system counts the current time)
  long-term = min(beta / (now - min(hol_after) + nu), 1)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig, World, build_episode
from .metrics import compute_metrics
from .schedulers import online_mask


def reward_shaping(
    hol_before: np.ndarray,
    hol_after: np.ndarray,
    now: float,
    oldest_dispatched: bool,
) -> float:
    """Advance of the system-wide oldest HoL arrival time across one TXOP.

    Zero when the pre-TXOP oldest packet survived (its timestamp still
    floors the minimum). NaN marks empty queues; all-empty after means all
    delay was cleared, so the minimum is taken at `now`.
    """
    before = hol_before[~np.isnan(hol_before)]
    if len(before) == 0:
        raise ValueError("shaping reward undefined with no pending packets before the TXOP")
    if not oldest_dispatched:
        return 0.0
    after = hol_after[~np.isnan(hol_after)]
    min_after = float(after.min()) if len(after) else now
    return min_after - float(before.min())


def reward_longterm(now: float, hol_after: np.ndarray, beta: float, nu: float) -> float:
    """Inverse of the worst queueing delay, clamped to 1."""
    after = hol_after[~np.isnan(hol_after)]
    worst_delay = now - float(after.min()) if len(after) else 0.0
    return min(beta / (worst_delay + nu), 1.0)


def build_observation(
    queue_len: np.ndarray,
    hol_ts: np.ndarray,
    now: float,
    serving_gain: np.ndarray,
    t_sim: float,
    rho_max: int,
    h_max: float,
) -> np.ndarray:
    delay = np.where(queue_len > 0, (now - hol_ts) / t_sim, 0.0)
    parts = [
        np.clip(delay, 0.0, 1.0),
        np.clip(queue_len / rho_max, 0.0, 1.0),
        np.clip(serving_gain / h_max, 0.0, 1.0),
    ]
    return np.concatenate(parts)


@dataclass
class EnvStep:
    observation: np.ndarray
    mask: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: dict = field(default_factory=dict)


class MaskedActionError(ValueError):
    """Step refused: the requested group is masked or out of range."""


class MapcEnv:
    """reset/step state machine over one episode at a time.

    `truncated` is reserved for external step budgets and never set here.
    """

    def __init__(self, scenario: ScenarioConfig):
        scenario.validate()
        self.scenario = scenario
        self.episode = None
        self.world: World | None = None
        self._state = None
        self._pre_records: list[dict] = []
        self._trace_cursor = 0

    @property
    def action_count(self) -> int:
        self._require_episode()
        return len(self.episode.catalog)

    @property
    def scheduler_state(self):
        """Pending decision snapshot (None once the episode finished)."""
        return self._state

    @property
    def sta_count(self) -> int:
        self._require_episode()
        return self.episode.catalog.sta_count

    def _require_episode(self) -> None:
        if self.episode is None:
            raise RuntimeError("environment not reset")

    def _collect_new_records(self) -> list[dict]:
        new = self.episode.trace[self._trace_cursor :]
        self._trace_cursor = len(self.episode.trace)
        return new

    def _observe(self) -> np.ndarray:
        ep = self.episode
        return build_observation(
            ep.queue_lengths(),
            ep.hol_timestamps(),
            ep.now,
            ep.serving_gain,
            self.scenario.t_sim,
            self.scenario.queue_capacity,
            self.scenario.h_max,
        )

    def _current_mask(self) -> np.ndarray:
        return online_mask(self.episode.catalog, self.episode.queue_lengths())

    def reset(self, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Fresh episode; advances to the first decision point."""
        world = None
        if self.world is not None and self.scenario.fixed_deployment_seed is not None:
            world = self.world  # deployment pinned; no need to rebuild
        self.episode, self.world = build_episode(self.scenario, seed, world)
        self._trace_cursor = 0
        state = self.episode.advance_to_decision()
        if state is None:
            raise RuntimeError("no traffic arrives before the simulation horizon")
        self._state = state
        self._pre_records = self._collect_new_records()
        return self._observe(), state.mask.copy()

    def step(self, action: int) -> EnvStep:
        """Run the pending TXOP with group `action`, then advance to the
        next decision point (absorbing collisions and idle gaps)."""
        self._require_episode()
        if self._state is None:
            raise RuntimeError("episode finished; reset the environment")
        action = int(action)
        if not 0 <= action < len(self._state.mask):
            raise MaskedActionError(f"action {action} out of range")
        if not self._state.mask[action]:
            raise MaskedActionError(f"action {action} is masked")

        ep = self.episode
        hol_before = ep.hol_timestamps()
        outcome, record = ep.execute(action)
        ep.sync_arrivals()  # packets that landed during the TXOP are visible now
        hol_after = ep.hol_timestamps()

        oldest_sta = int(np.nanargmin(hol_before))
        if oldest_sta in outcome.member_stas:
            m = outcome.member_stas.index(oldest_sta)
            oldest_dispatched = outcome.delivered[m] >= 1
        else:
            oldest_dispatched = False

        shaping = reward_shaping(hol_before, hol_after, ep.now, oldest_dispatched)
        longterm = reward_longterm(ep.now, hol_after, self.scenario.beta, self.scenario.nu)
        record["reward_shaping"] = shaping
        record["reward_longterm"] = longterm

        self._collect_new_records()  # consume the TXOP record just executed
        info = {"txop": record, "preceding": self._pre_records}
        next_state = ep.advance_to_decision()
        self._state = next_state
        self._pre_records = self._collect_new_records()
        terminated = next_state is None
        if terminated:
            # Collision records with no following TXOP, for trace replay.
            info["trailing"] = self._pre_records
            info["episode"] = episode_summary(ep)
            mask = self._current_mask()
        else:
            mask = next_state.mask.copy()
        return EnvStep(
            observation=self._observe(),
            mask=mask,
            reward=shaping + longterm,
            terminated=terminated,
            truncated=False,
            info=info,
        )


def episode_summary(episode) -> dict:
    """End-of-episode metrics exposed through the info channel."""
    result = episode.result()
    metrics = compute_metrics(result)
    return {
        "worst_p99": metrics.worst_p99 if np.isfinite(metrics.worst_p99) else None,
        "mean_delay": metrics.mean_delay,
        "delivered": int(result.delivered.sum()),
        "dropped": int(result.dropped.sum()),
        "arrivals": int(result.arrivals.sum()),
        "txops": result.txop_count,
        "collisions": result.collision_count,
    }


def run_heuristic_through_env(env: MapcEnv, policy, seed: int) -> list[dict]:
    """Drive a full episode through the env interface with an in-process
    policy; returns the engine trace (identical to the raw engine run)."""
    env.reset(seed)
    while True:
        step = env.step(policy(env.scheduler_state))
        if step.terminated:
            return env.episode.trace
