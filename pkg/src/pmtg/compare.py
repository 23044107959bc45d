"""Matched-budget comparison of two configurations.

Both arms train under the same master seed and rollout budget and are
evaluated on the same deterministic episodes, so the final delta is
attributable to the configuration difference alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .evaluate import EvalReport, evaluate
from .train import TrainResult, read_curve, train


class CompareError(ValueError):
    pass


@dataclass
class ComparisonResult:
    result_a: TrainResult
    result_b: TrainResult
    eval_a: EvalReport
    eval_b: EvalReport
    final_delta: float  # mean_return(A) - mean_return(B)
    table_path: Path


def compare(cfg_a: RunConfig, cfg_b: RunConfig, budget: int | None, out_dir: str | Path, quiet: bool = True) -> ComparisonResult:
    if cfg_a.env.kind != cfg_b.env.kind:
        raise CompareError(f"configs target different environments: {cfg_a.env.kind} vs {cfg_b.env.kind}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if budget is not None:
        cfg_a.run.max_rollouts = budget
        cfg_b.run.max_rollouts = budget

    res_a = train(cfg_a, out / "arm_a", quiet=quiet)
    res_b = train(cfg_b, out / "arm_b", quiet=quiet)
    eval_a = evaluate(cfg_a, res_a.params, res_a.normalizer)
    eval_b = evaluate(cfg_b, res_b.params, res_b.normalizer)

    curve_a = read_curve(res_a.curve_path)
    curve_b = read_curve(res_b.curve_path)
    table = out / "comparison.csv"
    with open(table, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "a_total_rollouts", "a_mean_return", "b_total_rollouts", "b_mean_return"])
        for i in range(min(len(curve_a["iteration"]), len(curve_b["iteration"]))):
            writer.writerow(
                [
                    int(curve_a["iteration"][i]),
                    int(curve_a["total_rollouts"][i]),
                    repr(curve_a["mean_return"][i]),
                    int(curve_b["total_rollouts"][i]),
                    repr(curve_b["mean_return"][i]),
                ]
            )
    return ComparisonResult(
        result_a=res_a,
        result_b=res_b,
        eval_a=eval_a,
        eval_b=eval_b,
        final_delta=eval_a.mean_return - eval_b.mean_return,
        table_path=table,
    )
