"""The shared rollout executor and the policy-environment wirings.

A wiring sits between a policy and an environment: it assembles the
observation vector, squashes raw policy outputs into bounded actions,
owns the trajectory-generator state, and feeds the environment. The
vanilla wirings remove the generator so the policy drives the actuators
directly; they exist as learning baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..policy import (
    ActionBounds,
    ActuatorLimits,
    PolicyParams,
    assemble_observation,
    compose_action,
    policy_forward,
    split_and_squash,
    squash,
)
from ..seeding import rng_for
from ..tg import (
    NUM_LEGS,
    TWO_PI,
    LegCommand,
    TgConfig,
    TgState,
    advance_phase,
    figure_eight,
    tg_leg_targets,
)


@dataclass
class RolloutRecord:
    """One episode of interaction, as the optimizers consume it."""

    observations: np.ndarray  # (n, obs_dim), raw (pre-normalization)
    raw_actions: np.ndarray  # (n, act_dim), pre-squash policy outputs
    rewards: np.ndarray  # (n,)
    episode_return: float
    length: int
    seed: int
    terminated: bool  # env ended the episode early (e.g. a fall)
    final_observation: np.ndarray
    values: np.ndarray | None = None
    diagnostics: dict[str, np.ndarray] | None = None


@dataclass
class RolloutTask:
    """A rollout request, self-contained so it can ship to a worker."""

    flat_params: np.ndarray
    seed: int
    normalizer_state: tuple | None = None
    noise_std: np.ndarray | None = None


class QuadrupedPmtgWiring:
    """Policy modulates the gait generator and corrects its leg targets."""

    def __init__(self, tg_cfg: TgConfig, bounds: ActionBounds, limits: ActuatorLimits, tg_only: bool = False):
        self.tg_cfg = tg_cfg
        self.bounds = bounds
        self.limits = limits
        self.tg_only = tg_only
        self.obs_dim = 7
        self.act_dim = 11
        self.state = TgState()

    def reset(self, env, seed: int) -> np.ndarray:
        self.state = TgState(0.0)
        imu = env.reset(seed)
        return assemble_observation(imu, env.current_target_speed, self.state.phase)

    def step(self, env, raw) -> tuple[np.ndarray, float, bool, dict]:
        if self.tg_only:
            mod = self.bounds.midpoint_modulation()
            fb = np.zeros(2 * NUM_LEGS)
        else:
            bundle = split_and_squash(raw, self.bounds)
            mod, fb = bundle.tg_mod, bundle.leg_feedback
        self.state = advance_phase(self.state, mod.frequency, self.tg_cfg.dt)
        u_tg = tg_leg_targets(self.state, mod, self.tg_cfg)
        cmd = compose_action(u_tg, fb, self.limits)
        imu, reward, done, info = env.step(cmd)
        obs = assemble_observation(imu, info["v_target"], self.state.phase)
        diag = dict(info)
        diag.update(
            f_tg=mod.frequency,
            alpha_tg=mod.swing_amplitude,
            h_tg=mod.walking_height,
            **{f"S_{i}": cmd.swing[i] for i in range(NUM_LEGS)},
            **{f"E_{i}": cmd.extension[i] for i in range(NUM_LEGS)},
        )
        return obs, reward, done, diag


class QuadrupedVanillaWiring:
    """Generator removed: the policy outputs the eight leg targets directly.

    Squash ranges match the set reachable by the modulated generator
    plus feedback, so the comparison is about structure, not authority.
    """

    def __init__(self, tg_cfg: TgConfig, bounds: ActionBounds, limits: ActuatorLimits):
        self.limits = limits
        amp_hi = bounds.amplitude[1]
        clearance = tg_cfg.extension_swing_amplitude
        self.swing_range = (
            tg_cfg.swing_center - amp_hi - bounds.feedback,
            tg_cfg.swing_center + amp_hi + bounds.feedback,
        )
        self.extension_range = (
            bounds.height[0] - clearance - bounds.feedback,
            bounds.height[1] + clearance + bounds.feedback,
        )
        self.obs_dim = 5
        self.act_dim = 8

    def reset(self, env, seed: int) -> np.ndarray:
        imu = env.reset(seed)
        return np.concatenate([imu, [env.current_target_speed]])

    def step(self, env, raw) -> tuple[np.ndarray, float, bool, dict]:
        raw = np.asarray(raw, dtype=float)
        swing = squash(raw[0::2], *self.swing_range)
        extension = squash(raw[1::2], *self.extension_range)
        zero = LegCommand(swing=np.zeros(NUM_LEGS), extension=np.zeros(NUM_LEGS))
        cmd = compose_action(zero, np.stack([swing, extension], axis=1).reshape(-1), self.limits)
        imu, reward, done, info = env.step(cmd)
        obs = np.concatenate([imu, [info["v_target"]]])
        diag = dict(info)
        diag.update(**{f"S_{i}": cmd.swing[i] for i in range(NUM_LEGS)}, **{f"E_{i}": cmd.extension[i] for i in range(NUM_LEGS)})
        return obs, reward, done, diag


def _pointmass_diag(info: dict, a_x: float, a_y: float) -> dict:
    return {
        "step": float(info["step"]),
        "x": float(info["position"][0]),
        "y": float(info["position"][1]),
        "target_x": float(info["target"][0]),
        "target_y": float(info["target"][1]),
        "a_x": a_x,
        "a_y": a_y,
    }


class PointmassPmtgWiring:
    """Policy corrects a fixed-frequency eight curve and scales its amplitudes."""

    def __init__(self, feedback_range: float = 0.5, amplitude_bounds: tuple[float, float] = (0.0, 1.2), period: int = 100):
        self.feedback_range = float(feedback_range)
        self.amplitude_bounds = tuple(amplitude_bounds)
        self.increment = 1.0 / float(period)
        self.obs_dim = 4
        self.act_dim = 4
        self.state = TgState()

    def reset(self, env, seed: int) -> np.ndarray:
        self.state = TgState(0.0)
        pos = env.reset(seed)
        return np.array([pos[0], pos[1], math.sin(self.state.phase), math.cos(self.state.phase)])

    def step(self, env, raw) -> tuple[np.ndarray, float, bool, dict]:
        raw = np.asarray(raw, dtype=float)
        fb = squash(raw[0:2], -self.feedback_range, self.feedback_range)
        a_x = float(squash(raw[2], *self.amplitude_bounds))
        a_y = float(squash(raw[3], *self.amplitude_bounds))
        self.state = advance_phase(self.state, 1.0, self.increment)
        tx, ty = figure_eight(self.state.phase / TWO_PI, a_x, a_y)
        u = np.array([tx + fb[0], ty + fb[1]])
        pos, reward, done, info = env.step(u)
        obs = np.array([pos[0], pos[1], math.sin(self.state.phase), math.cos(self.state.phase)])
        diag = _pointmass_diag(info, a_x, a_y)
        return obs, reward, done, diag


class PointmassVanillaWiring:
    """Reactive baseline: observe position only, output the next position."""

    def __init__(self, with_time: bool = False, period: int = 100):
        self.with_time = with_time
        self.period = int(period)
        self.obs_dim = 4 if with_time else 2
        self.act_dim = 2
        self._step_index = 0

    def _obs(self, pos) -> np.ndarray:
        if not self.with_time:
            return np.array([pos[0], pos[1]])
        phase = TWO_PI * self._step_index / self.period
        return np.array([pos[0], pos[1], math.sin(phase), math.cos(phase)])

    def reset(self, env, seed: int) -> np.ndarray:
        self._step_index = 0
        return self._obs(env.reset(seed))

    def step(self, env, raw) -> tuple[np.ndarray, float, bool, dict]:
        u = squash(np.asarray(raw, dtype=float), -1.0, 1.0)
        pos, reward, done, info = env.step(u)
        self._step_index += 1
        return self._obs(pos), reward, done, _pointmass_diag(info, 0.0, 0.0)


def rollout(
    params: PolicyParams,
    env,
    wiring,
    seed: int,
    normalizer=None,
    noise_std=None,
    record_diagnostics: bool = False,
) -> RolloutRecord:
    """Run one full episode; deterministic given (params, seed, config)."""
    obs_raw = wiring.reset(env, seed)
    noise_rng = rng_for(seed, "action_noise") if noise_std is not None else None

    observations, actions, rewards = [], [], []
    diag_rows: list[dict] = []
    terminated = False
    done = False
    while not done:
        obs_in = normalizer.apply(obs_raw) if normalizer is not None else obs_raw
        raw = policy_forward(params, obs_in)
        if noise_rng is not None:
            raw = raw + np.asarray(noise_std) * noise_rng.standard_normal(raw.shape)
        observations.append(obs_raw)
        actions.append(raw)
        obs_raw, reward, done, diag = wiring.step(env, raw)
        rewards.append(reward)
        if record_diagnostics:
            diag_rows.append(diag)
        if done:
            terminated = bool(diag.get("fell", False))

    diagnostics = None
    if record_diagnostics and diag_rows:
        keys = [k for k, v in diag_rows[0].items() if np.isscalar(v) or isinstance(v, (int, float, bool))]
        diagnostics = {k: np.array([row[k] for row in diag_rows], dtype=float) for k in keys}

    rewards_arr = np.asarray(rewards, dtype=float)
    return RolloutRecord(
        observations=np.asarray(observations, dtype=float),
        raw_actions=np.asarray(actions, dtype=float),
        rewards=rewards_arr,
        episode_return=float(rewards_arr.sum()),
        length=len(rewards),
        seed=seed,
        terminated=terminated,
        final_observation=np.asarray(obs_raw, dtype=float),
        diagnostics=diagnostics,
    )
