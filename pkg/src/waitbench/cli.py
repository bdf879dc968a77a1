"""Command-line entry point.

Subcommands:
  generate   write a seeded synthetic cohort as long CSV
  cluster    per-stratum similarity heatmaps, leaf orders, CH selection
  run        execute the full benchmark pipeline
  report     re-render table/SVGs from a finished run directory
  selftest   run the oracle verification suite

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import cluster as cl
from . import synth
from .data import AGES, CATEGORIES, bin_series, load_dataset, write_dataset
from .errors import WaitbenchError
from .metrics import report_from_json
from .pipeline import RunConfig, load_run_config, render_report, run_pipeline
from .selftest import run_selftest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waitbench",
        description="Forecasting benchmark for sparse bursty binary event series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic cohort CSV")
    p_gen.add_argument("--config", type=str, default=None, help="cohort config file")
    p_gen.add_argument("--seed", type=int, default=None, help="override cohort seed")
    p_gen.add_argument("--out", type=str, required=True, help="output CSV path")

    p_clu = sub.add_parser("cluster", help="cluster a dataset and export heatmaps")
    p_clu.add_argument("--input", type=str, required=True, help="long CSV dataset")
    p_clu.add_argument("--bin-width", type=int, default=10)
    p_clu.add_argument("--response-fraction", type=float, default=0.2)
    p_clu.add_argument("--out", type=str, required=True, help="output directory")

    p_run = sub.add_parser("run", help="execute the full pipeline")
    p_run.add_argument("--config", type=str, default=None, help="run config file")
    p_run.add_argument("--seed", type=int, default=None, help="override global seed")
    p_run.add_argument("--out", type=str, default=None, help="output root directory")
    p_run.add_argument("--threads", type=int, default=None, help="worker threads")

    p_rep = sub.add_parser("report", help="re-render a finished run")
    p_rep.add_argument("--run", type=str, required=True, help="run directory")
    p_rep.add_argument("--style", choices=("table", "svg", "both"), default="both")

    p_self = sub.add_parser("selftest", help="run the oracle verification suite")
    p_self.add_argument(
        "--only", type=str, default=None, help="comma-separated criterion numbers"
    )
    return parser


def parse_cli(argv: list[str]) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _cmd_generate(args) -> int:
    cfg = synth.load_cohort_config(args.config) if args.config else synth.CohortConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    ds = synth.generate_cohort(cfg)
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} series to {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    ds = load_dataset(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for age in AGES:
        for cat in CATEGORIES:
            ids = ds.child_ids(age, cat)
            if len(ids) < 3:
                print(f"skipping age {age} {cat}: {len(ids)} series", file=sys.stderr)
                continue
            binned = [bin_series(ds.get(cid, age, cat), args.bin_width) for cid in ids]
            dm = cl.distance_matrix(binned)
            dg = cl.ward_agglomerate(dm)
            data = np.stack([b.counts for b in binned]).astype(float)
            assign = cl.select_k_ch(dg, data, (2, len(ids) - 1))
            predictors, responses = cl.split_predictor_response(dm, args.response_fraction)
            stem = f"age{age}_{cat}"
            cl.similarity_heatmap(dm, dg.leaf_order, out / f"{stem}.csv", out / f"{stem}.svg")
            rows.append(
                {
                    "age": age,
                    "category": cat,
                    "selected_k": assign.k,
                    "ch_score": assign.ch_score,
                    "leaf_order": list(dg.leaf_order),
                    "predictors": predictors,
                    "responses": responses,
                }
            )
    (out / "clusters.json").write_text(
        json.dumps(rows, sort_keys=True, indent=1, default=str) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(rows)} strata to {out}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
        if cfg.input == "synth":
            overrides["cohort"] = dataclasses.replace(cfg.cohort, seed=args.seed)
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.threads is not None:
        overrides["n_threads"] = args.threads
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    run_dir = run_pipeline(cfg)
    print(f"run complete: {run_dir}")
    print((run_dir / "plots" / "table.txt").read_text(encoding="utf-8"), end="")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        print(f"no report.json under {run_dir}", file=sys.stderr)
        return 1
    report = report_from_json(report_path.read_text(encoding="utf-8"))
    traces = None
    traces_path = run_dir / "traces.json"
    if traces_path.exists():
        traces = json.loads(traces_path.read_text(encoding="utf-8"))
    written = render_report(report, run_dir / "plots", traces=traces, style=args.style)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_selftest(args) -> int:
    numbers = None
    if args.only:
        numbers = [int(tok) for tok in args.only.split(",") if tok.strip()]
    return 0 if run_selftest(numbers) else 1


def main(argv: list[str] | None = None) -> int:
    args = parse_cli(sys.argv[1:] if argv is None else argv)
    handlers = {
        "generate": _cmd_generate,
        "cluster": _cmd_cluster,
        "run": _cmd_run,
        "report": _cmd_report,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except (WaitbenchError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
