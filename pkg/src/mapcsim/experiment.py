"""Experiment orchestration: seeded episode sweeps across schedulers,
metric aggregation, the overload discard rule, and results persistence.

A "realization" is one (deployment, traffic) draw identified by its seed;
every configured scheduler runs on the identical realization so results
are paired. Output files are canonical: rows sorted by (variant, seed,
scheduler), keys sorted, no timestamps, so identical configs and seeds
produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, build_episode, scenario_from_dict, scenario_to_dict
from .mac import advance_episode, write_trace_jsonl
from .metrics import compute_metrics, discard_rule
from .schedulers import get_scheduler


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig
    schedulers: list[str]
    episodes: int = 100
    base_seed: int = 1
    workers: int = 1
    priority_bins: int = 5
    apply_discard: bool = True
    sweep_sta_counts: list[int] | None = None
    network_load_mean_mbps: float = 800.0
    network_load_sd_mbps: float = 92.4
    dump_traces: bool = False

    def validate(self) -> None:
        self.scenario.validate()
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not self.schedulers:
            raise ValueError("at least one scheduler required")
        for name in self.schedulers:
            get_scheduler(name)  # raises on unknown/external


def experiment_from_dict(doc: dict) -> ExperimentConfig:
    scenario = scenario_from_dict(doc)
    return ExperimentConfig(
        scenario=scenario,
        schedulers=list(doc.get("schedulers", ["mnp", "op", "tat"])),
        episodes=int(doc.get("episodes", 100)),
        base_seed=int(doc.get("seed", 1)),
        workers=int(doc.get("workers", 1)),
        priority_bins=int(doc.get("priority_bins", 5)),
        apply_discard=bool(doc.get("apply_discard", True)),
        sweep_sta_counts=doc.get("sweep_N", None),
        network_load_mean_mbps=float(doc.get("network_load_mean", 800.0)),
        network_load_sd_mbps=float(doc.get("network_load_sd", 92.4)),
    )


def load_range_for_sta_count(n: int, total_mean_mbps: float, total_sd_mbps: float) -> tuple[float, float]:
    """Per-STA uniform range whose N-STA sum has the requested moments.

    For iid U[a, b]: sum mean = N (a+b)/2, sum sd = sqrt(N) (b-a)/sqrt(12).
    """
    center = total_mean_mbps / n
    half_width = total_sd_mbps * math.sqrt(12.0 / n) / 2.0
    lo, hi = center - half_width, center + half_width
    if lo <= 0:
        raise ValueError(f"load sweep infeasible: U[{lo:.2f}, {hi:.2f}] for N={n}")
    return (lo, hi)


def _sweep_variants(cfg: ExperimentConfig) -> list[tuple[int, ScenarioConfig]]:
    """(total STA count, scenario) per sweep point; one entry when no sweep."""
    if not cfg.sweep_sta_counts:
        return [(cfg.scenario.sta_count, cfg.scenario)]
    variants = []
    j = cfg.scenario.deployment.ap_count
    for n in cfg.sweep_sta_counts:
        if n % j != 0:
            raise ValueError(f"sweep N={n} not divisible by J={j}")
        scenario = replace(
            cfg.scenario,
            deployment=replace(cfg.scenario.deployment, stas_per_ap=n // j),
            load_range_mbps=load_range_for_sta_count(
                n, cfg.network_load_mean_mbps, cfg.network_load_sd_mbps
            ),
        )
        variants.append((n, scenario))
    return variants


def _finite_or_none(v: float | None) -> float | None:
    if v is None or not np.isfinite(v):
        return None
    return float(v)


def run_realization(
    scenario: ScenarioConfig,
    seed: int,
    schedulers: list[str],
    bins: int,
    trace_dir: str | None = None,
) -> list[dict]:
    """Run every scheduler on one realization; returns one row each."""
    rows = []
    world = None
    for name in schedulers:
        episode, world_used = build_episode(scenario, seed, world)
        if scenario.fixed_deployment_seed is not None:
            world = world_used  # share across schedulers; it is seed-pinned anyway
        result = advance_episode(episode, get_scheduler(name))
        m = compute_metrics(result, bins)
        rows.append(
            {
                "n_sta": scenario.sta_count,
                "omega_range": list(scenario.load_range_mbps),
                "seed": seed,
                "scheduler": name,
                "worst_p99": _finite_or_none(m.worst_p99),
                "per_sta_p99": [_finite_or_none(v) for v in m.per_sta_p99],
                "mean_delay": m.mean_delay,
                "delay_count": m.delay_count,
                "priority_hist": m.priority_hist,
                "txops": m.txop_count,
                "collisions": m.collision_count,
                "arrivals": int(result.arrivals.sum()),
                "delivered": int(result.delivered.sum()),
                "dropped": int(result.dropped.sum()),
                "residual": int(result.residual.sum()),
            }
        )
        if trace_dir is not None:
            write_trace_jsonl(
                Path(trace_dir) / f"trace_n{scenario.sta_count}_s{seed}_{name}.jsonl",
                result.trace,
            )
    worst = {
        r["scheduler"]: (r["worst_p99"] if r["worst_p99"] is not None else float("inf"))
        for r in rows
    }
    kept = discard_rule(worst)
    for r in rows:
        r["kept"] = kept
    return rows


def _realization_task(args) -> list[dict]:
    return run_realization(*args)


def _median(values: list[float]) -> float | None:
    if not values:
        return None
    v = float(np.median(np.asarray(values)))
    return v if np.isfinite(v) else None


def summarize(rows: list[dict], schedulers: list[str], apply_discard: bool) -> dict:
    """Per-(variant, scheduler) aggregates over the episode rows."""
    variants = sorted({r["n_sta"] for r in rows})
    summary: dict = {"variants": []}
    for n in variants:
        var_rows = [r for r in rows if r["n_sta"] == n]
        seeds = {r["seed"] for r in var_rows}
        kept_seeds = {r["seed"] for r in var_rows if r["kept"]}
        entry = {
            "n_sta": n,
            "episodes": len(seeds),
            "discard_fraction": 1.0 - len(kept_seeds) / len(seeds),
            "schedulers": {},
        }
        for name in schedulers:
            s_rows = [r for r in var_rows if r["scheduler"] == name]
            pool = [r for r in s_rows if r["kept"]] if apply_discard else s_rows
            tails = [
                r["worst_p99"] if r["worst_p99"] is not None else float("inf")
                for r in pool
            ]
            means = [r["mean_delay"] for r in pool if r["mean_delay"] is not None]
            hists = [r["priority_hist"] for r in pool if sum(r["priority_hist"]) > 0]
            entry["schedulers"][name] = {
                "episodes_used": len(pool),
                "median_worst_p99": _median(tails),
                "mean_worst_p99": _finite_or_none(float(np.mean(tails)) if tails else None),
                "mean_delay": float(np.mean(means)) if means else None,
                "priority_hist": (
                    np.mean(np.asarray(hists), axis=0).tolist() if hists else None
                ),
            }
        summary["variants"].append(entry)
    return summary


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path) -> dict:
    """Execute all episodes, write results.jsonl / summary.json / config.json."""
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_dir = None
    if cfg.dump_traces:
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)

    tasks = []
    for _, scenario in _sweep_variants(cfg):
        for i in range(cfg.episodes):
            tasks.append(
                (scenario, cfg.base_seed + i, cfg.schedulers, cfg.priority_bins,
                 str(trace_dir) if trace_dir else None)
            )

    rows: list[dict] = []
    failures: list[dict] = []

    def record(task, outcome, error) -> None:
        if error is None:
            rows.extend(outcome)
        else:  # a bad realization must not kill the sweep
            failures.append({"n_sta": task[0].sta_count, "seed": task[1], "error": str(error)})

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_realization_task, task) for task in tasks]
            for task, fut in zip(tasks, futures):
                try:
                    record(task, fut.result(), None)
                except Exception as exc:
                    record(task, None, exc)
    else:
        for task in tasks:
            try:
                record(task, _realization_task(task), None)
            except Exception as exc:
                record(task, None, exc)

    rows.sort(key=lambda r: (r["n_sta"], r["seed"], r["scheduler"]))
    with open(out / "results.jsonl", "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")

    summary = summarize(rows, cfg.schedulers, cfg.apply_discard)
    if failures:
        summary["failed_episodes"] = failures
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")

    doc = scenario_to_dict(cfg.scenario)
    doc.update(
        {
            "schedulers": cfg.schedulers,
            "episodes": cfg.episodes,
            "seed": cfg.base_seed,
            "priority_bins": cfg.priority_bins,
            "apply_discard": cfg.apply_discard,
            "sweep_N": cfg.sweep_sta_counts,
            "network_load_mean": cfg.network_load_mean_mbps,
            "network_load_sd": cfg.network_load_sd_mbps,
        }
    )
    with open(out / "config.json", "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return summary
