"""Synthetic 2D control task: chase a deformed eight curve.

A point in a 2 m x 2 m workspace is commanded by desired-next-position
actions (reached exactly, clamped to the workspace) and rewarded by the
negative Euclidean distance to a moving target on a deformed figure
eight. The target's cycle position is hidden from reactive policies,
which is what makes the task partially observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .seeding import rng_for
from .tg import figure_eight

WORKSPACE_HALF = 1.0  # m, per axis


@dataclass(frozen=True)
class TargetCurve:
    """Deformed unit eight: point(k) = deformation @ eight(k / period) + offset."""

    deformation: np.ndarray  # (2, 2), invertible
    offset: np.ndarray  # (2,), m
    period: int = 100  # steps per cycle

    def __post_init__(self):
        object.__setattr__(self, "deformation", np.asarray(self.deformation, dtype=float))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        if self.deformation.shape != (2, 2):
            raise ValueError("deformation must be a 2x2 matrix")
        if abs(np.linalg.det(self.deformation)) < 1e-12:
            raise ValueError("deformation must be invertible")
        if self.period < 1:
            raise ValueError("period must be >= 1 step")


def default_curve(
    rotation_deg: float = 20.0,
    scale=(1.3, 0.7),
    base_amplitude: float = 0.6,
    offset=(0.2, 0.1),
    period: int = 100,
) -> TargetCurve:
    """Rotated, anisotropically scaled eight that still fits the workspace."""
    a = math.radians(rotation_deg)
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    deform = rot @ np.diag([scale[0] * base_amplitude, scale[1] * base_amplitude])
    return TargetCurve(deformation=deform, offset=np.asarray(offset, dtype=float), period=period)


def pm_target(step_index: int, curve: TargetCurve) -> np.ndarray:
    """Target position at an integer step index (periodic)."""
    x, y = figure_eight(step_index / curve.period, 1.0, 1.0)
    return curve.deformation @ np.array([x, y]) + curve.offset


@dataclass
class PointState:
    position: np.ndarray  # (2,), m
    step_index: int


class PointMassEnv:
    """Exact-teleport point mass; actions are desired next positions."""

    def __init__(self, curve: TargetCurve | None = None, episode_steps: int = 400, reset_noise: float = 0.05):
        self.curve = curve if curve is not None else default_curve()
        self.episode_steps = int(episode_steps)
        self.reset_noise = float(reset_noise)
        self.state: PointState | None = None

    def reset(self, seed: int) -> np.ndarray:
        pos = pm_target(0, self.curve)
        if self.reset_noise > 0.0:
            pos = pos + rng_for(seed, "pm_reset").normal(0.0, self.reset_noise, size=2)
        pos = np.clip(pos, -WORKSPACE_HALF, WORKSPACE_HALF)
        self.state = PointState(position=pos, step_index=0)
        return pos.copy()

    def step(self, u) -> tuple[np.ndarray, float, bool, dict]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        u = np.asarray(u, dtype=float)
        if u.shape != (2,) or not np.isfinite(u).all():
            raise ValueError(f"action must be a finite 2-vector, got {u}")
        pos = np.clip(u, -WORKSPACE_HALF, WORKSPACE_HALF)
        k = self.state.step_index + 1
        target = pm_target(k, self.curve)
        reward = -float(np.linalg.norm(pos - target))
        self.state = PointState(position=pos, step_index=k)
        done = k >= self.episode_steps
        info = {"step": k, "target": target, "position": pos.copy()}
        return pos.copy(), reward, done, info
