"""Augmented random search: finite-difference search over policy parameters
with top-direction filtering and return-std step scaling.

Each iteration samples N Gaussian directions, evaluates the policy at
params +/- std * direction (one seeded rollout per probe by default),
keeps the best directions by max(r+, r-), and steps along the
return-weighted sum. All reductions run in a canonical order so worker
count and direction permutation never change the numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import rng_for, seed_for
from .normalizer import RunningNormalizer
from .rollout import RolloutRecord, RolloutTask


class OptimizationError(RuntimeError):
    """An update had to be rejected (e.g. non-finite returns)."""


@dataclass(frozen=True)
class ArsConfig:
    step_size: float = 0.02
    noise_std: float = 0.025
    num_directions: int = 8
    top_directions: int = 4
    rollouts_per_direction: int = 1
    normalize_obs: bool = False

    def __post_init__(self):
        if self.num_directions < 1:
            raise ValueError("num_directions must be >= 1")
        if not 1 <= self.top_directions <= self.num_directions:
            raise ValueError("top_directions must be in [1, num_directions]")
        if self.step_size <= 0.0 or self.noise_std <= 0.0:
            raise ValueError("step_size and noise_std must be > 0")
        if self.rollouts_per_direction < 1:
            raise ValueError("rollouts_per_direction must be >= 1")

    @property
    def rollouts_per_iteration(self) -> int:
        return 2 * self.num_directions * self.rollouts_per_direction


def sample_directions(dim: int, cfg: ArsConfig, iteration: int, master_seed: int) -> np.ndarray:
    """The iteration's (N, dim) Gaussian probe directions, seeded by name."""
    rng = rng_for(master_seed, "ars_directions", iteration)
    return rng.standard_normal((cfg.num_directions, dim))


def ars_update(flat: np.ndarray, directions: np.ndarray, r_plus, r_minus, cfg: ArsConfig):
    """Pure parameter update from probe returns.

    Returns (new_flat, sigma_used). The top directions are ranked by
    max(r+, r-), the step is scaled by the std of the returns that were
    actually used (1 when they are all equal), and the reduction runs in
    a canonical sort order so it is invariant to permutations of the
    inputs.
    """
    r_plus = np.asarray(r_plus, dtype=float)
    r_minus = np.asarray(r_minus, dtype=float)
    if not (np.isfinite(r_plus).all() and np.isfinite(r_minus).all()):
        raise OptimizationError(f"non-finite rollout returns: r+={r_plus}, r-={r_minus}")
    best = np.maximum(r_plus, r_minus)
    # canonical order: best return first, diff as tie-break
    order = np.lexsort((-(r_plus - r_minus), -best))[: cfg.top_directions]
    used = np.concatenate([r_plus[order], r_minus[order]])
    sigma = float(used.std())
    if sigma == 0.0:
        sigma = 1.0
    scale = cfg.step_size / (len(order) * sigma)
    step = np.zeros_like(flat)
    for k in order:
        step += (r_plus[k] - r_minus[k]) * directions[k]
    return flat + scale * step, sigma


@dataclass
class IterationStats:
    iteration: int
    returns: np.ndarray  # all 2*N*rollouts returns, task order
    mean_return: float
    max_return: float
    min_return: float
    sigma_used: float
    rollouts: int
    env_steps: int


class ArsTrainer:
    """Drives ARS iterations through an injected rollout evaluator.

    `evaluate_many(tasks) -> list[RolloutRecord]` must preserve task
    order; it may fan tasks out to workers. The observation normalizer
    is frozen while an iteration's rollouts run and updated afterwards
    from their observations in task order, so serial and parallel
    execution produce bit-identical results.
    """

    def __init__(
        self,
        params_flat: np.ndarray,
        cfg: ArsConfig,
        master_seed: int,
        obs_dim: int,
        evaluate_many,
    ):
        self.flat = np.asarray(params_flat, dtype=float).copy()
        self.cfg = cfg
        self.master_seed = master_seed
        self.evaluate_many = evaluate_many
        self.normalizer = RunningNormalizer(obs_dim) if cfg.normalize_obs else None
        self.iteration = 0
        self.total_rollouts = 0
        self.total_env_steps = 0

    def run_iteration(self) -> IterationStats:
        cfg = self.cfg
        directions = sample_directions(self.flat.size, cfg, self.iteration, self.master_seed)
        norm_state = self.normalizer.state() if self.normalizer is not None else None

        tasks = []
        for k in range(cfg.num_directions):
            for sign in (1, -1):
                probe = self.flat + sign * cfg.noise_std * directions[k]
                for j in range(cfg.rollouts_per_direction):
                    seed = seed_for(self.master_seed, "rollout", self.iteration, k, sign, j)
                    tasks.append(RolloutTask(flat_params=probe, seed=seed, normalizer_state=norm_state))

        records: list[RolloutRecord] = self.evaluate_many(tasks)
        if len(records) != len(tasks):
            raise OptimizationError(f"evaluator returned {len(records)} records for {len(tasks)} tasks")

        per_probe = np.array([r.episode_return for r in records], dtype=float)
        grouped = per_probe.reshape(cfg.num_directions, 2, cfg.rollouts_per_direction).mean(axis=2)
        r_plus, r_minus = grouped[:, 0], grouped[:, 1]

        self.flat, sigma = ars_update(self.flat, directions, r_plus, r_minus, cfg)

        if self.normalizer is not None:
            for rec in records:
                self.normalizer.update_batch(rec.observations)

        env_steps = int(sum(r.length for r in records))
        self.total_rollouts += len(records)
        self.total_env_steps += env_steps
        stats = IterationStats(
            iteration=self.iteration,
            returns=per_probe,
            mean_return=float(per_probe.mean()),
            max_return=float(per_probe.max()),
            min_return=float(per_probe.min()),
            sigma_used=sigma,
            rollouts=len(records),
            env_steps=env_steps,
        )
        self.iteration += 1
        return stats
