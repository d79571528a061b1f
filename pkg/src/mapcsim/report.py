"""Reporting: summary tables, plot-ready CSV, and rendered figures.

Reads the results.jsonl / summary.json pair written by an experiment run
and emits, next to them (or into --out):

  summary.csv            per-(variant, scheduler) aggregates
  worst_p99.csv          one row per episode per scheduler (long format)
  priority_hist.csv      mean selection frequency per priority bin
  delay_distribution.png worst tail-delay boxplots per scheduler
  selection_frequency.png  priority-bin selection histogram
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

_BIN_LABELS = {5: ["L", "ML", "M", "MH", "H"]}


def load_results(in_dir: str | Path) -> tuple[list[dict], dict]:
    in_dir = Path(in_dir)
    rows = []
    with open(in_dir / "results.jsonl") as fh:
        for line in fh:
            rows.append(json.loads(line))
    with open(in_dir / "summary.json") as fh:
        summary = json.load(fh)
    return rows, summary


def _fmt_ms(v) -> str:
    return "-" if v is None else f"{v * 1e3:.2f}"


def write_summary_csv(summary: dict, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["n_sta", "scheduler", "episodes_used", "discard_fraction",
             "median_worst_p99_ms", "mean_worst_p99_ms", "mean_delay_ms"]
        )
        for var in summary["variants"]:
            for name, agg in sorted(var["schedulers"].items()):
                w.writerow(
                    [
                        var["n_sta"],
                        name,
                        agg["episodes_used"],
                        f"{var['discard_fraction']:.4f}",
                        _fmt_ms(agg["median_worst_p99"]),
                        _fmt_ms(agg["mean_worst_p99"]),
                        _fmt_ms(agg["mean_delay"]),
                    ]
                )


def write_tail_csv(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_sta", "scheduler", "seed", "worst_p99_s", "mean_delay_s", "kept"])
        for r in rows:
            w.writerow(
                [r["n_sta"], r["scheduler"], r["seed"],
                 "" if r["worst_p99"] is None else repr(r["worst_p99"]),
                 "" if r["mean_delay"] is None else repr(r["mean_delay"]),
                 int(r["kept"])]
            )


def write_priority_csv(summary: dict, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_sta", "scheduler", "bin", "frequency"])
        for var in summary["variants"]:
            for name, agg in sorted(var["schedulers"].items()):
                hist = agg.get("priority_hist")
                if not hist:
                    continue
                for b, freq in enumerate(hist):
                    w.writerow([var["n_sta"], name, b, repr(freq)])


def plot_delay_distribution(rows: list[dict], schedulers: list[str], path: Path) -> None:
    variants = sorted({r["n_sta"] for r in rows})
    fig, axes = plt.subplots(
        1, len(variants), figsize=(1.0 + 3.1 * len(variants), 3.6), squeeze=False, sharey=True
    )
    for ax, n in zip(axes[0], variants):
        data, labels = [], []
        for name in schedulers:
            tails = [
                r["worst_p99"] * 1e3
                for r in rows
                if r["n_sta"] == n and r["scheduler"] == name
                and r["kept"] and r["worst_p99"] is not None
            ]
            data.append(tails if tails else [np.nan])
            labels.append(name.upper())
        ax.boxplot(data, tick_labels=labels, showfliers=True)
        ax.axhline(100.0, color="crimson", lw=0.8, ls="--", label="100 ms")
        ax.set_title(f"N = {n} STAs")
        ax.set_ylabel("worst 99th-pct delay [ms]")
        ax.grid(alpha=0.3)
    axes[0][-1].legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_selection_frequency(summary: dict, schedulers: list[str], path: Path) -> None:
    variants = summary["variants"]
    fig, axes = plt.subplots(
        1, len(variants), figsize=(1.0 + 3.4 * len(variants), 3.4), squeeze=False
    )
    for ax, var in zip(axes[0], variants):
        hists = {
            name: var["schedulers"][name].get("priority_hist")
            for name in schedulers
            if var["schedulers"].get(name, {}).get("priority_hist")
        }
        if not hists:
            continue
        bins = len(next(iter(hists.values())))
        labels = _BIN_LABELS.get(bins, [str(b) for b in range(bins)])
        x = np.arange(bins)
        width = 0.8 / max(len(hists), 1)
        for k, (name, hist) in enumerate(sorted(hists.items())):
            ax.bar(x + (k - (len(hists) - 1) / 2) * width, hist, width, label=name.upper())
        ax.set_xticks(x, labels)
        ax.set_xlabel("priority index (low to high)")
        ax.set_ylabel("selection frequency")
        ax.set_title(f"N = {var['n_sta']} STAs")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(in_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Emit tables, CSVs and figures for one experiment directory."""
    in_dir = Path(in_dir)
    out = Path(out_dir) if out_dir else in_dir
    out.mkdir(parents=True, exist_ok=True)
    rows, summary = load_results(in_dir)
    schedulers = sorted({r["scheduler"] for r in rows})

    outputs = []
    for name, writer, arg in [
        ("summary.csv", write_summary_csv, summary),
        ("worst_p99.csv", write_tail_csv, rows),
        ("priority_hist.csv", write_priority_csv, summary),
    ]:
        path = out / name
        writer(arg, path)
        outputs.append(path)
    fig1 = out / "delay_distribution.png"
    plot_delay_distribution(rows, schedulers, fig1)
    outputs.append(fig1)
    fig2 = out / "selection_frequency.png"
    plot_selection_frequency(summary, schedulers, fig2)
    outputs.append(fig2)
    return outputs


def print_summary(summary: dict) -> None:
    for var in summary["variants"]:
        print(f"N = {var['n_sta']} STAs | episodes {var['episodes']} | "
              f"discarded {var['discard_fraction'] * 100:.0f}%")
        print(f"  {'scheduler':<10} {'used':>5} {'median worst-p99':>18} "
              f"{'mean worst-p99':>16} {'mean delay':>12}")
        for name, agg in sorted(var["schedulers"].items()):
            print(
                f"  {name:<10} {agg['episodes_used']:>5} "
                f"{_fmt_ms(agg['median_worst_p99']):>15} ms "
                f"{_fmt_ms(agg['mean_worst_p99']):>13} ms "
                f"{_fmt_ms(agg['mean_delay']):>9} ms"
            )
