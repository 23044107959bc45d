"""Deterministic policy evaluation and per-step trace export.

Evaluation episodes use seeds 0..num_episodes-1 and run without
perturbations unless the config asks for them. The quadruped tracking
error compares the commanded speed against a stride-averaged (0.5 s
trailing window) forward speed; the raw per-tick speed also appears in
the traces.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .experiment import build_env, build_wiring
from .optim.normalizer import RunningNormalizer
from .optim.rollout import rollout
from .policy import PolicyParams

SPEED_WINDOW_S = 0.5

POINTMASS_TRACE_COLUMNS = ["step", "x", "y", "target_x", "target_y", "reward", "a_x", "a_y"]
QUADRUPED_TRACE_COLUMNS = (
    ["t", "v_target", "v", "pitch", "f_tg", "alpha_tg", "h_tg"]
    + [f"S_{i}" for i in range(4)]
    + [f"E_{i}" for i in range(4)]
)


@dataclass
class EpisodeSummary:
    seed: int
    episode_return: float
    length: int
    fell: bool
    tracking_error: float | None = None
    mean_step_reward: float = 0.0


@dataclass
class EvalReport:
    mean_return: float
    mean_step_reward: float
    fall_rate: float
    tracking_error: float | None  # quadruped only
    episodes: list[EpisodeSummary] = field(default_factory=list)


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average with a growing head window."""
    c = np.cumsum(np.concatenate([[0.0], values]))
    out = np.empty(len(values))
    for i in range(len(values)):
        j = max(0, i - window + 1)
        out[i] = (c[i + 1] - c[j]) / (i + 1 - j)
    return out


def _write_trace(path: Path, columns: list[str], rows: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        n = len(next(iter(rows.values())))
        for i in range(n):
            writer.writerow([repr(float(rows[c][i])) for c in columns])


def evaluate(
    cfg: RunConfig,
    params: PolicyParams,
    normalizer: RunningNormalizer | None = None,
    num_episodes: int | None = None,
    tg_only: bool = False,
    trace_dir: str | Path | None = None,
) -> EvalReport:
    n = num_episodes if num_episodes is not None else cfg.run.eval_episodes
    want_trace = trace_dir is not None
    if want_trace:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)

    episodes = []
    quadruped = cfg.env.kind == "quadruped"
    window = max(1, int(round(SPEED_WINDOW_S / cfg.env.quadruped.control_dt))) if quadruped else 1
    for ep in range(n):
        env = build_env(cfg, training=False)
        wiring = build_wiring(cfg, tg_only=tg_only)
        rec = rollout(params, env, wiring, ep, normalizer=normalizer, record_diagnostics=True)
        d = rec.diagnostics
        err = None
        if quadruped:
            smoothed = moving_average(d["v"], window)
            err = float(np.abs(smoothed - d["v_target"]).mean())
        episodes.append(
            EpisodeSummary(
                seed=ep,
                episode_return=rec.episode_return,
                length=rec.length,
                fell=rec.terminated,
                tracking_error=err,
                mean_step_reward=rec.episode_return / rec.length,
            )
        )
        if want_trace:
            if quadruped:
                cols = {c: d[c] for c in QUADRUPED_TRACE_COLUMNS if c in d}
                _write_trace(trace_dir / f"episode_{ep}.csv", list(cols), cols)
            else:
                rows = {
                    "step": d["step"],
                    "x": d["x"],
                    "y": d["y"],
                    "target_x": d["target_x"],
                    "target_y": d["target_y"],
                    "reward": rec.rewards,
                    "a_x": d["a_x"],
                    "a_y": d["a_y"],
                }
                _write_trace(trace_dir / f"episode_{ep}.csv", POINTMASS_TRACE_COLUMNS, rows)

    return EvalReport(
        mean_return=float(np.mean([e.episode_return for e in episodes])),
        mean_step_reward=float(np.mean([e.mean_step_reward for e in episodes])),
        fall_rate=float(np.mean([e.fell for e in episodes])),
        tracking_error=(float(np.mean([e.tracking_error for e in episodes])) if quadruped else None),
        episodes=episodes,
    )
