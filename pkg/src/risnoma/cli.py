"""Command-line entry point: run one scheme, sweep a parameter, benchmark, export."""

from __future__ import annotations

import argparse
import json
import os

from .config import SimConfig, load_config
from .harness import (
    FIGURES,
    SCHEME_NAMES,
    SWEEPABLE,
    bench_decision_path,
    emit_plotdata,
    export_figures,
    run_scheme,
    sweep,
)


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="TOML config file; defaults to the built-in parameters")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--profile", choices=("exact", "lightweight"), default="exact")
    parser.add_argument("--out", metavar="DIR", default="runs")


def _load_sim(args) -> SimConfig:
    return load_config(args.config) if args.config else SimConfig()


def _parse_values(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_seeds(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risnoma",
        description="Simulator and optimizers for RIS-assisted semantic NOMA uplink",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="train/evaluate one scheme and write its trace")
    _add_common(p_run)
    p_run.add_argument("--scheme", choices=SCHEME_NAMES, default="pdoo")
    p_run.add_argument("--train-steps", type=int, default=None,
                       help="override the training budget")
    p_run.add_argument("--eval-slots", type=int, default=400)
    p_run.add_argument("--checkpoint-in", default=None)

    p_sweep = sub.add_parser("sweep", help="run a scheme across parameter values")
    _add_common(p_sweep)
    p_sweep.add_argument("--scheme", choices=SCHEME_NAMES, default="alg1")
    p_sweep.add_argument("--param", choices=SWEEPABLE, required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--seeds", default="42,43,44,45,46",
                         help="comma-separated seeds, paired across values")
    p_sweep.add_argument("--train-steps", type=int, default=None)
    p_sweep.add_argument("--eval-slots", type=int, default=200)
    p_sweep.add_argument("--metric", default="mean_eta_hat",
                         choices=("mean_eta_hat", "mean_eta", "mean_reward",
                                  "mean_penalty", "mean_power"))

    p_bench = sub.add_parser("bench", help="time the per-slot decision path")
    _add_common(p_bench)
    p_bench.add_argument("--schemes", default="lightweight,pdoo,all_selection")
    p_bench.add_argument("--steps", type=int, default=100)

    p_export = sub.add_parser("export", help="produce the experiment CSV files")
    _add_common(p_export)
    p_export.add_argument("--figures", default="all",
                          help=f"comma list from {', '.join(FIGURES)} or 'all'")
    p_export.add_argument("--full", action="store_true",
                          help="use full budgets instead of quick desk-scale ones")
    return parser


def cmd_run(args) -> int:
    sim = _load_sim(args)
    os.makedirs(args.out, exist_ok=True)
    tag = f"{args.scheme}_seed{args.seed}"
    report = run_scheme(
        sim,
        args.scheme,
        seed=args.seed,
        profile=args.profile,
        train_steps=args.train_steps,
        eval_slots=args.eval_slots,
        checkpoint_in=args.checkpoint_in,
        checkpoint_out=os.path.join(args.out, f"{tag}.ckpt"),
        metrics_csv=os.path.join(args.out, f"{tag}_train.csv"),
    )
    report.trace.write_csv(os.path.join(args.out, f"{tag}_trace.csv"))
    summary = {
        "scheme": report.scheme,
        "seed": report.seed,
        "mean_reward": report.mean_reward,
        "mean_eta": report.mean_eta,
        "mean_eta_hat": report.mean_eta_hat,
        "mean_penalty": report.mean_penalty,
        "mean_power": report.mean_power,
        "mode_fractions": report.mode_fractions,
        "train_seconds": report.train_seconds,
    }
    with open(os.path.join(args.out, f"{tag}_report.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"{report.scheme} seed={report.seed} "
          f"reward={report.mean_reward:.4f} eta={report.mean_eta:.4f} "
          f"eta_hat={report.mean_eta_hat:.4f} penalty={report.mean_penalty:.4f}")
    print(f"wrote {args.out}/{tag}_trace.csv")
    return 0


def cmd_sweep(args) -> int:
    sim = _load_sim(args)
    os.makedirs(args.out, exist_ok=True)
    values = _parse_values(args.values)
    seeds = _parse_seeds(args.seeds)
    reports = sweep(
        sim, args.scheme, args.param, values, seeds,
        profile=args.profile, train_steps=args.train_steps,
        eval_slots=args.eval_slots,
    )
    path = os.path.join(args.out, f"sweep_{args.scheme}_{args.param}.csv")
    rows = emit_plotdata(reports, path, metric=args.metric)
    for scheme, x, mean, std, n in rows:
        print(f"{scheme} {args.param}={x} {args.metric}={mean:.5f} +/- {std:.5f} (n={n})")
    print(f"wrote {path}")
    return 0


def cmd_bench(args) -> int:
    sim = _load_sim(args)
    os.makedirs(args.out, exist_ok=True)
    names = [s.strip() for s in args.schemes.split(",") if s.strip()]
    results = bench_decision_path(sim, names, seed=args.seed, steps=args.steps)
    path = os.path.join(args.out, "table3_timing.csv")
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["scheme", "x", "mean", "std", "n"])
        for name, (mean, std) in results.items():
            writer.writerow([name, "", mean, std, args.steps])
            print(f"{name}: {mean * 1e3:.3f} ms/slot (+/- {std * 1e3:.3f})")
    print(f"wrote {path}")
    return 0


def cmd_export(args) -> int:
    sim = _load_sim(args)
    figures = tuple(s.strip() for s in args.figures.split(",") if s.strip())
    produced = export_figures(sim, args.out, figures=figures, quick=not args.full)
    for name in produced:
        print(f"wrote {os.path.join(args.out, name + '.csv')}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "bench": cmd_bench,
                "export": cmd_export}
    return handlers[args.verb](args)


if __name__ == "__main__":
    raise SystemExit(main())
