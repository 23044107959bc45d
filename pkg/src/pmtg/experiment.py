"""Builders that turn a RunConfig into live environments, wirings and policies."""

from __future__ import annotations

import math

from .config import RunConfig
from .policy import ActionBounds, ActuatorLimits, PolicyParams, PolicyShape, init_params
from .pointmass import PointMassEnv, TargetCurve, default_curve
from .quadruped import (
    ContactModel,
    PerturbationSchedule,
    QuadrupedEnv,
    RobotModel,
    TaskSpec,
)
from .optim.rollout import (
    PointmassPmtgWiring,
    PointmassVanillaWiring,
    QuadrupedPmtgWiring,
    QuadrupedVanillaWiring,
)
from .seeding import rng_for
from .tg import LegCommand, TgConfig, gait_table


def tg_config_for(cfg: RunConfig) -> TgConfig:
    t = cfg.tg
    return gait_table(
        t.gait,
        swing_center=t.swing_center,
        extension_swing_amplitude=t.extension_swing_amplitude,
        extension_asymmetry=t.extension_asymmetry,
        stance_fraction=t.stance_fraction,
        leg_phase_offsets=t.leg_phase_offsets,
        dt=cfg.env.quadruped.control_dt,
    )


def bounds_for(cfg: RunConfig) -> ActionBounds:
    b = cfg.bounds
    return ActionBounds(frequency=b.frequency, amplitude=b.amplitude, height=b.height, feedback=b.feedback)


def robot_model_for(cfg: RunConfig) -> RobotModel:
    m = cfg.env.quadruped.model
    return RobotModel(
        mass=m.mass,
        inertia=m.inertia,
        leg_length=m.leg_length,
        extension_gain=m.extension_gain,
        extension_reference=m.extension_reference,
        hip_offsets=m.hip_offsets,
        servo_rate=m.servo_rate,
        limits=ActuatorLimits(swing=m.swing_limits, extension=m.extension_limits),
        fall_pitch=m.fall_pitch,
        fall_height_fraction=m.fall_height_fraction,
    )


def target_curve_for(cfg: RunConfig) -> TargetCurve:
    p = cfg.env.pointmass
    return default_curve(
        rotation_deg=p.rotation_deg,
        scale=p.scale,
        base_amplitude=p.base_amplitude,
        offset=p.offset,
        period=p.period,
    )


def reset_pose_for(cfg: RunConfig) -> tuple[LegCommand, float]:
    """Initial joints and body height: the generator's warped-time-zero pose
    at midpoint modulation, standing at leg_length * cos(swing_center)."""
    tg = tg_config_for(cfg)
    mod0 = bounds_for(cfg).midpoint_modulation()
    e0 = mod0.walking_height + tg.extension_asymmetry
    s0 = tg.swing_center + mod0.swing_amplitude
    model = robot_model_for(cfg)
    height = model.leg_length_at(e0) * math.cos(tg.swing_center)
    return LegCommand.constant(s0, e0), height


def build_env(cfg: RunConfig, training: bool = True, episode_override: int | None = None):
    """Instantiate the configured environment.

    training=False disables perturbations unless run.eval_perturbations
    is set. episode_override shortens pointmass episodes (training only).
    """
    if cfg.env.kind == "pointmass":
        p = cfg.env.pointmass
        steps = episode_override if episode_override is not None else p.episode_steps
        return PointMassEnv(target_curve_for(cfg), episode_steps=steps, reset_noise=p.reset_noise)
    q = cfg.env.quadruped
    perturb_on = training or cfg.run.eval_perturbations
    pose, height = reset_pose_for(cfg)
    return QuadrupedEnv(
        model=robot_model_for(cfg),
        contact=ContactModel(
            normal_stiffness=q.contact.normal_stiffness,
            normal_damping=q.contact.normal_damping,
            tangential_stiffness=q.contact.tangential_stiffness,
            tangential_damping=q.contact.tangential_damping,
            friction=q.contact.friction,
        ),
        task=TaskSpec(
            v_max=q.task.v_max,
            episode_seconds=q.task.episode_seconds,
            profile_fracs=q.task.profile_fracs,
            perturb=PerturbationSchedule(
                events=q.task.perturb.events if q.task.perturb.enabled else 0,
                duration_s=q.task.perturb.duration_s,
                max_fx=q.task.perturb.max_fx,
                max_fz=q.task.perturb.max_fz,
            ),
        ),
        physics_dt=q.physics_dt,
        control_dt=q.control_dt,
        reset_noise_height=q.reset_noise_height,
        reset_noise_pitch=q.reset_noise_pitch,
        reset_pose=pose,
        reset_height=height,
        perturbations_enabled=perturb_on,
    )


def build_wiring(cfg: RunConfig, tg_only: bool = False):
    if cfg.env.kind == "pointmass":
        p = cfg.env.pointmass
        if cfg.env.wiring == "pmtg":
            return PointmassPmtgWiring(feedback_range=p.feedback_range, amplitude_bounds=p.amplitude_bounds, period=p.period)
        return PointmassVanillaWiring(with_time=(cfg.env.wiring == "vanilla_time"), period=p.period)
    tg = tg_config_for(cfg)
    bounds = bounds_for(cfg)
    limits = robot_model_for(cfg).limits
    if cfg.env.wiring == "pmtg":
        return QuadrupedPmtgWiring(tg, bounds, limits, tg_only=tg_only)
    return QuadrupedVanillaWiring(tg, bounds, limits)


def policy_shape_for(cfg: RunConfig) -> PolicyShape:
    wiring = build_wiring(cfg)
    if cfg.policy.kind == "linear":
        return PolicyShape("linear", wiring.obs_dim, wiring.act_dim)
    return PolicyShape("mlp", wiring.obs_dim, wiring.act_dim, tuple(cfg.policy.hidden))


def initial_policy(cfg: RunConfig) -> PolicyParams:
    """ARS starts from zeros (midpoint actions); PPO from a small seeded init."""
    shape = policy_shape_for(cfg)
    if cfg.optim.algo == "ars":
        return init_params(shape)
    return init_params(shape, rng=rng_for(cfg.run.master_seed, "policy_init"), scale=0.1)
