"""Training orchestration: optimizer loop, logs, checkpoints, evaluation.

Everything a run produces lives under one output directory:

    resolved_config.yaml     the exact configuration that ran
    learning_curve.csv       per-iteration training statistics
    eval_curve.csv           periodic deterministic evaluations
    checkpoints/             initial/periodic/final/emergency policies

Logs are append-only CSV; float cells are written with repr() so a
parsed file reproduces the in-memory sequences exactly. With run.timing
set to "zero" the wall_time_s column is written as 0.0, which makes two
runs of the same seed byte-identical.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .config import RunConfig, config_hash, save_config
from .evaluate import EvalReport, evaluate
from .experiment import initial_policy, policy_shape_for
from .optim.ars import ArsConfig, ArsTrainer
from .optim.ppo import PpoConfig, PpoTrainer
from .parallel import RolloutPool
from .policy import PolicyParams

CURVE_COLUMNS = [
    "iteration",
    "total_rollouts",
    "total_env_steps",
    "mean_return",
    "max_return",
    "min_return",
    "wall_time_s",
]
EVAL_COLUMNS = ["iteration", "mean_return", "mean_step_reward", "tracking_error", "fall_rate"]


@dataclass
class TrainResult:
    iterations: int
    total_rollouts: int
    total_env_steps: int
    params: PolicyParams
    normalizer: object
    checkpoint_path: Path
    curve_path: Path
    stopped_early: bool
    final_eval: EvalReport | None


class _CsvLog:
    """Append-only CSV writer whose float cells round-trip exactly."""

    def __init__(self, path: Path, columns: list[str]):
        self.path = path
        self.columns = columns
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerow(columns)

    def append(self, row: dict) -> None:
        cells = []
        for c in self.columns:
            v = row[c]
            cells.append(repr(float(v)) if isinstance(v, float) else str(v))
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow(cells)


def read_curve(path) -> dict[str, list]:
    """Parse a CSV log back into per-column sequences (floats where possible)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        columns: dict[str, list] = {c: [] for c in header}
        for row in reader:
            for c, cell in zip(header, row):
                try:
                    columns[c].append(float(cell))
                except ValueError:
                    columns[c].append(cell)
    return columns


def _ars_config(cfg: RunConfig) -> ArsConfig:
    a = cfg.optim.ars
    return ArsConfig(
        step_size=a.step_size,
        noise_std=a.noise_std,
        num_directions=a.num_directions,
        top_directions=a.top_directions,
        rollouts_per_direction=a.rollouts_per_direction,
        normalize_obs=a.normalize_obs,
    )


def _ppo_config(cfg: RunConfig) -> PpoConfig:
    p = cfg.optim.ppo
    return PpoConfig(
        clip_ratio=p.clip_ratio,
        discount=p.discount,
        gae_lambda=p.gae_lambda,
        learning_rate=p.learning_rate,
        epochs=p.epochs,
        minibatch_size=p.minibatch_size,
        value_coef=p.value_coef,
        entropy_coef=p.entropy_coef,
        action_std=p.action_std,
        rollouts_per_batch=p.rollouts_per_batch,
        value_hidden=p.value_hidden,
    )


def train(cfg: RunConfig, out_dir: str | Path, quiet: bool = False) -> TrainResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    save_config(cfg, out / "resolved_config.yaml")
    chash = config_hash(cfg)

    shape = policy_shape_for(cfg)
    params = initial_policy(cfg)
    run = cfg.run

    def ckpt(name: str, flat: np.ndarray, normalizer=None) -> Path:
        path = ckpt_dir / name
        save_checkpoint(path, PolicyParams(shape, flat.copy()), run.master_seed, chash, normalizer=normalizer)
        return path

    init_path = ckpt("initial.ckpt", params.flat)
    curve = _CsvLog(out / "learning_curve.csv", CURVE_COLUMNS)
    eval_log = _CsvLog(out / "eval_curve.csv", EVAL_COLUMNS)

    budget = run.max_rollouts
    episode_override = run.train_episode_steps if cfg.env.kind == "pointmass" else None
    pool = RolloutPool(cfg, workers=run.workers, episode_override=episode_override)
    if cfg.optim.algo == "ars":
        trainer = ArsTrainer(params.flat, _ars_config(cfg), run.master_seed, shape.input_dim, pool.evaluate_many)
    else:
        trainer = PpoTrainer(shape, _ppo_config(cfg), run.master_seed, pool.evaluate_many)

    def current_params() -> PolicyParams:
        return PolicyParams(shape, trainer.flat.copy())

    def current_normalizer():
        return getattr(trainer, "normalizer", None)

    t0 = time.perf_counter()
    stopped_early = False
    final_eval: EvalReport | None = None
    try:
        while trainer.iteration < run.max_iterations:
            if budget is not None and trainer.total_rollouts + _per_iteration(cfg) > budget:
                break
            stats = trainer.run_iteration()
            wall = time.perf_counter() - t0 if run.timing == "wall" else 0.0
            curve.append(
                {
                    "iteration": stats.iteration,
                    "total_rollouts": trainer.total_rollouts,
                    "total_env_steps": trainer.total_env_steps,
                    "mean_return": stats.mean_return,
                    "max_return": stats.max_return,
                    "min_return": stats.min_return,
                    "wall_time_s": round(wall, 3),
                }
            )
            if run.checkpoint_every and (trainer.iteration % run.checkpoint_every == 0):
                ckpt(f"iter_{trainer.iteration:06d}.ckpt", trainer.flat, current_normalizer())
            if trainer.iteration % run.eval_every == 0:
                report = evaluate(cfg, current_params(), current_normalizer())
                eval_log.append(
                    {
                        "iteration": trainer.iteration,
                        "mean_return": report.mean_return,
                        "mean_step_reward": report.mean_step_reward,
                        "tracking_error": report.tracking_error if report.tracking_error is not None else float("nan"),
                        "fall_rate": report.fall_rate,
                    }
                )
                final_eval = report
                if not quiet:
                    err = f" err={report.tracking_error:.3f}" if report.tracking_error is not None else ""
                    print(
                        f"iter {trainer.iteration:4d} rollouts {trainer.total_rollouts:6d} "
                        f"train_mean {stats.mean_return:9.2f} eval_mean {report.mean_return:9.2f}{err}",
                        flush=True,
                    )
                if _early_stop(cfg, report):
                    stopped_early = True
                    break
    except Exception:
        ckpt("emergency.ckpt", trainer.flat, current_normalizer())
        pool.close()
        raise
    pool.close()

    final_path = ckpt("final.ckpt", trainer.flat, current_normalizer())
    return TrainResult(
        iterations=trainer.iteration,
        total_rollouts=trainer.total_rollouts,
        total_env_steps=trainer.total_env_steps,
        params=current_params(),
        normalizer=current_normalizer(),
        checkpoint_path=final_path if trainer.iteration > 0 else init_path,
        curve_path=out / "learning_curve.csv",
        stopped_early=stopped_early,
        final_eval=final_eval,
    )


def _per_iteration(cfg: RunConfig) -> int:
    if cfg.optim.algo == "ars":
        a = cfg.optim.ars
        return 2 * a.num_directions * a.rollouts_per_direction
    return cfg.optim.ppo.rollouts_per_batch


def _early_stop(cfg: RunConfig, report: EvalReport) -> bool:
    metric = cfg.run.early_stop_metric
    if metric is None:
        return False
    threshold = cfg.run.early_stop_threshold
    if metric == "tracking_error":
        return (
            report.tracking_error is not None
            and report.tracking_error <= threshold
            and report.fall_rate == 0.0
        )
    return report.mean_return >= threshold
