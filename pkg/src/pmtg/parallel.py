"""Rollout execution, serial or on a process pool.

Workers own their environment and wiring; tasks are immutable and
results are gathered in task order, so worker count never changes the
numbers an optimizer sees.
"""

from __future__ import annotations

import multiprocessing as mp

from .config import RunConfig, config_from_dict, config_to_dict
from .experiment import build_env, build_wiring, policy_shape_for
from .optim.normalizer import RunningNormalizer
from .optim.rollout import RolloutTask, rollout
from .policy import PolicyParams

_WORKER: dict = {}


def _run_one(cfg: RunConfig, shape, tg_only: bool, training: bool, episode_override, task: RolloutTask):
    env = build_env(cfg, training=training, episode_override=episode_override)
    wiring = build_wiring(cfg, tg_only=tg_only)
    normalizer = (
        RunningNormalizer.from_state(wiring.obs_dim, task.normalizer_state)
        if task.normalizer_state is not None
        else None
    )
    return rollout(
        PolicyParams(shape, task.flat_params),
        env,
        wiring,
        task.seed,
        normalizer=normalizer,
        noise_std=task.noise_std,
    )


def _init_worker(cfg_dict: dict, tg_only: bool, training: bool, episode_override):
    cfg = config_from_dict(cfg_dict)
    _WORKER["cfg"] = cfg
    _WORKER["shape"] = policy_shape_for(cfg)
    _WORKER["tg_only"] = tg_only
    _WORKER["training"] = training
    _WORKER["episode_override"] = episode_override


def _worker_task(task: RolloutTask):
    return _run_one(
        _WORKER["cfg"],
        _WORKER["shape"],
        _WORKER["tg_only"],
        _WORKER["training"],
        _WORKER["episode_override"],
        task,
    )


class RolloutPool:
    """Order-preserving evaluate_many over 1..N processes."""

    def __init__(self, cfg: RunConfig, workers: int = 1, tg_only: bool = False, training: bool = True, episode_override: int | None = None):
        self.cfg = cfg
        self.shape = policy_shape_for(cfg)
        self.tg_only = tg_only
        self.training = training
        self.episode_override = episode_override
        self._pool = None
        if workers > 1:
            self._pool = mp.get_context("fork").Pool(
                workers,
                initializer=_init_worker,
                initargs=(config_to_dict(cfg), tg_only, training, episode_override),
            )

    def evaluate_many(self, tasks: list[RolloutTask]):
        if self._pool is None:
            return [
                _run_one(self.cfg, self.shape, self.tg_only, self.training, self.episode_override, t)
                for t in tasks
            ]
        return self._pool.map(_worker_task, tasks)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
