"""``noma-sim`` command line entry point."""
from __future__ import annotations

import argparse
import sys
from collections import defaultdict

from .config import ConfigError, EXPERIMENTS, load_config
from .experiments import run_experiment
from .results import write_csv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noma-sim", description="Uplink NOMA Monte Carlo simulator")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--experiment", choices=EXPERIMENTS, help="override the experiment")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--dump-samples", metavar="PATH",
                   help="write aligned payload samples (float64 I/Q) plus a PATH.txt header")
    return p


def summarize(rows) -> list:
    """One line per (SNR, M) point."""
    groups = defaultdict(list)
    for r in rows:
        groups[(r.snr_db, r.M)].append(f"{r.metric}={r.value:.6g}")
    lines = []
    for (snr, M), parts in groups.items():
        snr_txt = "-" if snr is None else f"{snr:g} dB"
        lines.append(f"{rows[0].experiment} snr={snr_txt} M={M} " + " ".join(parts))
    return lines


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.config is None and args.experiment is None:
        print("error: experiment: give --config or --experiment", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, experiment=args.experiment,
                          overrides={"seed": args.seed, "trials": args.trials})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = run_experiment(cfg, dump_path=args.dump_samples)
        if args.out:
            write_csv(rows, args.out)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in summarize(rows):
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
