"""Command-line interface: train, eval, compare, export-plots, print-config.

Output locations resolve against $PMTG_OUTPUT_ROOT when set. Any config
key can be overridden on the command line with `--set dotted.path=value`.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
from pathlib import Path

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint
from .compare import CompareError, compare
from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    config_hash,
    dump_config,
    load_config,
)
from .evaluate import evaluate
from .experiment import policy_shape_for
from .train import read_curve, train


def _out_path(path: str) -> Path:
    root = os.environ.get("PMTG_OUTPUT_ROOT")
    p = Path(path)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _load(config_path: str | None, overrides: list[str]) -> RunConfig:
    cfg = load_config(config_path) if config_path else RunConfig()
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def cmd_train(args) -> int:
    cfg = _load(args.config, args.set)
    out = _out_path(args.output or cfg.run.output_dir or "runs/train")
    result = train(cfg, out, quiet=args.quiet)
    print(f"finished: {result.iterations} iterations, {result.total_rollouts} rollouts, "
          f"{result.total_env_steps} env steps")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"learning curve: {result.curve_path}")
    if result.final_eval is not None:
        fe = result.final_eval
        err = f" tracking_error={fe.tracking_error:.4f}" if fe.tracking_error is not None else ""
        print(f"last eval: mean_return={fe.mean_return:.3f}{err} fall_rate={fe.fall_rate:.2f}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args.config, args.set)
    expected = config_hash(cfg) if args.config else None
    params, meta = load_checkpoint(args.checkpoint, expected_config_hash=expected, force=args.force)
    shape = policy_shape_for(cfg)
    if params.shape != shape:
        print(f"error: checkpoint layout {params.shape} does not match config layout {shape}", file=sys.stderr)
        return 2
    trace_dir = _out_path(args.trace_dir) if args.trace else None
    report = evaluate(
        cfg,
        params,
        normalizer=meta["normalizer"],
        num_episodes=args.episodes,
        tg_only=args.tg_only,
        trace_dir=trace_dir,
    )
    print(f"episodes: {len(report.episodes)}")
    for e in report.episodes:
        err = f" tracking_error={e.tracking_error:.4f}" if e.tracking_error is not None else ""
        print(
            f"  seed {e.seed}: return={e.episode_return:.3f} steps={e.length}"
            f" fell={e.fell}{err}"
        )
    err = f" tracking_error={report.tracking_error:.4f}" if report.tracking_error is not None else ""
    print(f"mean_return={report.mean_return:.3f} mean_step_reward={report.mean_step_reward:.4f}"
          f" fall_rate={report.fall_rate:.2f}{err}")
    if trace_dir:
        print(f"traces: {trace_dir}")
    return 0


def cmd_compare(args) -> int:
    cfg_a = _load(args.config_a, args.set)
    cfg_b = _load(args.config_b, args.set)
    out = _out_path(args.output)
    result = compare(cfg_a, cfg_b, args.budget, out, quiet=args.quiet)
    print(f"A: mean_return={result.eval_a.mean_return:.4f} ({result.result_a.total_rollouts} rollouts)")
    print(f"B: mean_return={result.eval_b.mean_return:.4f} ({result.result_b.total_rollouts} rollouts)")
    print(f"final delta (A - B): {result.final_delta:.4f}")
    print(f"aligned curves: {result.table_path}")
    return 0


def cmd_export_plots(args) -> int:
    run_dir = Path(args.run_dir)
    out = _out_path(args.output or str(run_dir / "plots"))
    out.mkdir(parents=True, exist_ok=True)
    found = 0
    for name in ("learning_curve.csv", "eval_curve.csv", "comparison.csv"):
        src = run_dir / name
        if src.exists():
            read_curve(src)  # validates the file parses back
            shutil.copy2(src, out / name)
            found += 1
    for trace in sorted(run_dir.glob("**/episode_*.csv")):
        shutil.copy2(trace, out / trace.name)
        found += 1
    if found == 0:
        print(f"error: no plot data found under {run_dir}", file=sys.stderr)
        return 2
    print(f"exported {found} plot-ready CSV files to {out}")
    return 0


def cmd_print_config(args) -> int:
    cfg = _load(args.config, args.set)
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmtg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pmtg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("-c", "--config", help="YAML config file (defaults apply when omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field by dotted path")

    p = sub.add_parser("train", help="train a policy per the config")
    add_common(p)
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint deterministically")
    p.add_argument("checkpoint")
    add_common(p)
    p.add_argument("-n", "--episodes", type=int, default=None)
    p.add_argument("--trace", action="store_true", help="write per-step trace CSVs")
    p.add_argument("--trace-dir", default="runs/eval_traces")
    p.add_argument("--tg-only", action="store_true",
                   help="force zero feedback and fixed midpoint modulation")
    p.add_argument("--force", action="store_true", help="proceed on config-hash mismatch")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("compare", help="train two configs under one budget")
    p.add_argument("-a", "--config-a", required=True)
    p.add_argument("-b", "--config-b", required=True)
    p.add_argument("--budget", type=int, default=None, help="rollout budget per arm")
    p.add_argument("-o", "--output", default="runs/compare")
    p.add_argument("-q", "--quiet", action="store_true", default=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("export-plots", help="collect plot-ready CSVs from a run directory")
    p.add_argument("run_dir")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_export_plots)

    p = sub.add_parser("print-config", help="print the fully resolved configuration")
    add_common(p)
    p.set_defaults(fn=cmd_print_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, CheckpointError, CompareError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
