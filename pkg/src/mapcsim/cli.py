"""Command-line interface.

    mapcsim simulate --config cfg.json --scheduler tat --episodes 100 --seed 1 --out results/
    mapcsim serve-env --config cfg.json --socket /tmp/env.sock
    mapcsim report --in results/
    mapcsim init-config --out cfg.json
    mapcsim export-catalog --config cfg.json --seed 7 --out catalog.json
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import build_world, load_config, scenario_from_dict, scenario_to_dict
from .experiment import experiment_from_dict, run_experiment
from .report import load_results, print_summary, render_report
from .schedulers import SCHEDULER_NAMES


def _add_simulate(sub) -> None:
    p = sub.add_parser("simulate", help="run seeded episodes for one or more schedulers")
    p.add_argument("--config", required=True)
    p.add_argument("--scheduler", action="append", choices=sorted(SCHEDULER_NAMES),
                   help="override the config's scheduler list (repeatable)")
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--traces", action="store_true", help="also dump per-episode TXOP traces")


def _add_serve(sub) -> None:
    p = sub.add_parser("serve-env", help="expose the environment protocol to external agents")
    p.add_argument("--config", required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--socket", help="unix socket path to listen on")
    mode.add_argument("--stdio", action="store_true", help="serve one session on stdin/stdout")


def _add_report(sub) -> None:
    p = sub.add_parser("report", help="summaries, plot-ready CSVs and figures for a results dir")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", default=None)


def _add_init(sub) -> None:
    p = sub.add_parser("init-config", help="write a config file with the default parameter table")
    p.add_argument("--out", required=True)


def _add_catalog(sub) -> None:
    p = sub.add_parser("export-catalog", help="build and export one deployment's SR group catalog")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True, help="deployment seed")
    p.add_argument("--out", required=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mapcsim")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_serve(sub)
    _add_report(sub)
    _add_init(sub)
    _add_catalog(sub)
    args = parser.parse_args(argv)

    if args.command == "simulate":
        doc = load_config(args.config)
        cfg = experiment_from_dict(doc)
        if args.scheduler:
            cfg.schedulers = args.scheduler
        if args.episodes is not None:
            cfg.episodes = args.episodes
        if args.seed is not None:
            cfg.base_seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        cfg.dump_traces = args.traces
        if "external" in cfg.schedulers:
            parser.error("scheduler 'external' is driven over the protocol; use serve-env")
        summary = run_experiment(cfg, args.out)
        print_summary(summary)
        return 0

    if args.command == "serve-env":
        scenario = scenario_from_dict(load_config(args.config))
        if args.stdio:
            from .protocol import serve_stdio

            serve_stdio(scenario)
            return 0
        from .protocol import EnvServer

        server = EnvServer(scenario, args.socket)
        server.start()
        print(f"serving environment protocol on {args.socket}", file=sys.stderr)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.stop()
        return 0

    if args.command == "report":
        outputs = render_report(args.in_dir, args.out_dir)
        _, summary = load_results(args.in_dir)
        print_summary(summary)
        for path in outputs:
            print(f"wrote {path}")
        return 0

    if args.command == "init-config":
        from .config import ScenarioConfig

        doc = scenario_to_dict(ScenarioConfig())
        doc.update({"schedulers": ["mnp", "op", "tat"], "episodes": 100, "seed": 1,
                    "workers": 1, "priority_bins": 5, "apply_discard": True,
                    "sweep_N": None, "network_load_mean": 800.0, "network_load_sd": 92.4,
                    "mcs_table_csv": None})
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.out}")
        return 0

    if args.command == "export-catalog":
        scenario = scenario_from_dict(load_config(args.config))
        world = build_world(scenario, args.seed)
        with open(args.out, "w") as fh:
            fh.write(world.catalog.to_json())
            fh.write("\n")
        print(f"wrote {args.out} ({len(world.catalog)} groups)")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
