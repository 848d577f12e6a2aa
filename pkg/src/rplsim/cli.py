"""Batch runner: expand a config into its scenario grid and emit results.

``rplsim run config.cfg --out results/`` runs every (variant, seed) pair,
then writes per-run rows (runs.csv), per-variant aggregates with 95%
confidence half-widths (summary.csv), and plain columnar plot data for the
four standard figures (PDR and delay vs replay interval, detection accuracy,
per-attacker response time).  Nothing is written until every run has
finished, so a failed batch leaves no partial results.  Output is
byte-stable for a given config and seed list.
"""

from __future__ import annotations

import argparse
import logging
import multiprocessing
import os
import sys
from dataclasses import replace

from . import engine, metrics
from .config import BatchConfig, ConfigError, load_batch
from .trace import write_trace

log = logging.getLogger("rplsim")


def _run_one(job):
    label, scenario, seed, keep_trace = job
    run_metrics, trace = engine.run(scenario, seed)
    return label, seed, run_metrics, trace if keep_trace else None


def run_batch(
    config_path: str,
    out_dir: str,
    seeds: tuple[int, ...] | None = None,
    mode: str | None = None,
    mobility: str | None = None,
    keep_traces: bool = False,
    workers: int = 1,
) -> dict[str, str]:
    """Run the whole grid and write result files; returns the file paths."""
    batch = load_batch(config_path)
    if seeds:
        batch = replace(batch, seeds=tuple(seeds))
    if mode:
        if mode not in batch.modes:
            raise ConfigError(f"--mode {mode} not present in config modes")
        batch = replace(batch, modes=(mode,))
    if mobility:
        if mobility not in batch.mobility_modes:
            raise ConfigError(f"--mobility {mobility} not in config mobility_modes")
        batch = replace(batch, mobility_modes=(mobility,))

    variants = list(batch.variants())
    jobs = [
        (
            label,
            replace(scenario, trace_positions=True) if keep_traces else scenario,
            seed,
            keep_traces,
        )
        for label, scenario, _ in variants
        for seed in batch.seeds
    ]
    log.info("running %d jobs (%d variants x %d seeds)", len(jobs), len(variants), len(batch.seeds))
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            raw = pool.map(_run_one, jobs)
    else:
        raw = [_run_one(job) for job in jobs]
    results = {(label, seed): (m, trace) for label, seed, m, trace in raw}

    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    runs_path = os.path.join(out_dir, "runs.csv")
    with open(runs_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metrics.RUN_CSV_HEADER + "\n")
        for label, _, _ in variants:
            for seed in batch.seeds:
                fh.write(metrics.run_csv_row(label, seed, results[(label, seed)][0]) + "\n")
    paths["runs"] = runs_path

    summary_path = os.path.join(out_dir, "summary.csv")
    duration = batch.base.duration_ms
    attack_start = batch.base.attacker.attack_start_ms
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metrics.AGGREGATE_CSV_HEADER + "\n")
        for label, _, _ in variants:
            runs = [results[(label, seed)][0] for seed in batch.seeds]
            fh.write(metrics.aggregate_csv_row(label, runs, duration, attack_start) + "\n")
    paths["summary"] = summary_path

    paths.update(_write_plot_data(out_dir, batch, variants, results))

    if keep_traces:
        trace_dir = os.path.join(out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
        for (label, seed), (_, trace) in sorted(results.items()):
            if trace is not None:
                write_trace(trace, os.path.join(trace_dir, f"{label}-s{seed}.tsv"))
        paths["traces"] = trace_dir
    return paths


def _fmt(value, scale=1.0) -> str:
    return "NA" if value is None else f"{value * scale:.6f}"


def _write_plot_data(out_dir, batch: BatchConfig, variants, results) -> dict[str, str]:
    by_label = {
        label: [results[(label, seed)][0] for seed in batch.seeds]
        for label, _, _ in variants
    }
    intervals = sorted(batch.replay_intervals_ms)
    mobs = [m for m in ("static", "mobile") if m in batch.mobility_modes]
    duration = batch.base.duration_ms
    attack_start = batch.base.attacker.attack_start_ms
    paths = {}

    def series_label(mob, mode, interval):
        return f"{mob}-baseline" if mode == "baseline" else f"{mob}-{mode}-r{interval // 1000}s"

    def mean_of(label, attr, scale=1.0):
        runs = by_label.get(label)
        if not runs:
            return None
        mean = metrics.aggregate([getattr(m, attr) for m in runs]).mean
        return None if mean is None else mean * scale

    for figure, attr, scale in (("pdr", "pdr", 1.0), ("ae2ed", "ae2ed_ms", 0.001)):
        path = os.path.join(out_dir, f"plot_{figure}.dat")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            cols = [
                f"{mob}-{mode}"
                for mob in mobs
                for mode in batch.modes
            ]
            fh.write("# replay_interval_s " + " ".join(cols) + "\n")
            for interval in intervals:
                row = [f"{interval / 1000:g}"]
                for mob in mobs:
                    for mode in batch.modes:
                        row.append(_fmt(mean_of(series_label(mob, mode, interval), attr, scale)))
                fh.write(" ".join(row) + "\n")
        paths[f"plot_{figure}"] = path

    path = os.path.join(out_dir, "plot_ada.dat")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cols = [f"{mob}-cosec" for mob in mobs]
        fh.write("# replay_interval_s " + " ".join(cols) + "\n")
        for interval in intervals:
            row = [f"{interval / 1000:g}"]
            for mob in mobs:
                row.append(_fmt(mean_of(series_label(mob, "cosec", interval), "ada")))
            fh.write(" ".join(row) + "\n")
    paths["plot_ada"] = path

    path = os.path.join(out_dir, "plot_frt.dat")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# replay_interval_s attacker " + " ".join(f"{m}-cosec_frt_s" for m in mobs) + "\n")
        attackers = sorted(
            {
                a
                for runs in by_label.values()
                for m in runs
                for a in m.frt_ms
            }
        )
        for interval in intervals:
            for attacker in attackers:
                row = [f"{interval / 1000:g}", str(attacker)]
                for mob in mobs:
                    runs = by_label.get(series_label(mob, "cosec", interval))
                    if not runs:
                        row.append("NA")
                        continue
                    vals = [
                        float(m.frt_ms[attacker])
                        if m.frt_ms.get(attacker) is not None
                        else float(duration - attack_start)
                        for m in runs
                        if attacker in m.frt_ms
                    ]
                    row.append(_fmt(metrics.aggregate(vals).mean, 0.001))
                fh.write(" ".join(row) + "\n")
    paths["plot_frt"] = path
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rplsim",
        description="RPL/6LoWPAN replay-attack simulator and IDS evaluation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario batch from a config file")
    run_p.add_argument("config", help="path to the scenario config file")
    run_p.add_argument("--out", required=True, help="output directory for result files")
    run_p.add_argument("--seeds", help="comma-separated seed list overriding the config")
    run_p.add_argument("--mode", choices=["baseline", "attack", "cosec"])
    run_p.add_argument("--mobility", choices=["static", "mobile"])
    run_p.add_argument("--trace", action="store_true", help="also write per-run trace files")
    run_p.add_argument("--workers", type=int, default=1, help="parallel run workers")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, os.environ.get("RPLSIM_LOG", "WARNING").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        seeds = None
        if args.seeds:
            seeds = tuple(int(tok) for tok in args.seeds.split(","))
        paths = run_batch(
            args.config,
            args.out,
            seeds=seeds,
            mode=args.mode,
            mobility=args.mobility,
            keep_traces=args.trace,
            workers=args.workers,
        )
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
