"""Reduced-order planar quadruped: a sagittal-plane body on four massless,
position-servoed legs with spring-damper ground contact.

The body has three degrees of freedom (x, z, pitch). Legs are attached
on the centerline at two hip points and turn swing/extension commands
into foot positions; ground reaction forces act on the body at the hip.
Roll does not exist in the plane, so the IMU reports zeros for roll and
roll rate to keep the 7-dim observation layout.

Sign convention: with the cosine swing generator, the stance sweep
moves feet from back to front, which pushes the body toward -x; forward
speed is therefore -xd. This is a free choice of world axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._physics import PARAM_SIZE, STATE_SIZE, step_physics
from .policy import ActuatorLimits
from .seeding import rng_for
from .tg import NUM_LEGS, LegCommand

GRAVITY = 9.81


class SimulationError(RuntimeError):
    """The integrator produced a non-finite state; the episode is aborted."""


class ModelError(ValueError):
    """Inconsistent robot/contact configuration."""


@dataclass(frozen=True)
class RobotModel:
    """Rigid-body and leg constants of the surrogate robot."""

    mass: float = 6.0  # kg
    inertia: float = 0.1  # kg m^2, about pitch
    leg_length: float = 0.25  # m, at the reference extension
    extension_gain: float = 0.1  # m/rad; larger extension shortens the leg
    extension_reference: float = 1.2  # rad
    hip_offsets: tuple[float, float, float, float] = (0.2, 0.2, -0.2, -0.2)  # m, FL FR BL BR
    servo_rate: float = 20.0  # rad/s slew limit
    limits: ActuatorLimits = field(default_factory=ActuatorLimits)
    min_leg_length: float = 0.02  # m
    fall_pitch: float = 0.8  # rad
    fall_height_fraction: float = 0.55  # of leg_length

    def __post_init__(self):
        for name in ("mass", "inertia", "leg_length", "extension_gain"):
            if getattr(self, name) <= 0.0:
                raise ModelError(f"{name} must be > 0")
        if len(self.hip_offsets) != NUM_LEGS:
            raise ModelError("hip_offsets must have exactly 4 entries")

    def leg_length_at(self, extension: float) -> float:
        return self.leg_length + self.extension_gain * (self.extension_reference - extension)


@dataclass(frozen=True)
class ContactModel:
    """Spring-damper ground with anchored Coulomb friction."""

    normal_stiffness: float = 4000.0  # N/m
    normal_damping: float = 120.0  # N s/m
    tangential_stiffness: float = 4000.0  # N/m, stiction anchor spring
    tangential_damping: float = 40.0  # N s/m
    friction: float = 0.8

    def __post_init__(self):
        for name in ("normal_stiffness", "normal_damping", "tangential_stiffness", "tangential_damping", "friction"):
            if getattr(self, name) < 0.0:
                raise ModelError(f"{name} must be >= 0")


@dataclass(frozen=True)
class PerturbationSchedule:
    """Random pushes applied to the body during training rollouts."""

    events: int = 4
    duration_s: float = 0.2
    max_fx: float = 10.0  # N
    max_fz: float = 60.0  # N


@dataclass(frozen=True)
class TaskSpec:
    """Speed-tracking task: profile shape, episode length, perturbations."""

    v_max: float = 0.4  # m/s
    episode_seconds: float = 25.0
    profile_fracs: tuple[float, float, float] = (0.2, 0.45, 0.75)
    perturb: PerturbationSchedule = field(default_factory=PerturbationSchedule)

    def __post_init__(self):
        if self.v_max <= 0.0:
            raise ModelError("v_max must be > 0")
        if self.episode_seconds <= 0.0:
            raise ModelError("episode length must be > 0")
        f1, f2, f3 = self.profile_fracs
        if not 0.0 < f1 < f2 < f3 <= 1.0:
            raise ModelError(f"profile fractions must be increasing in (0, 1], got {self.profile_fracs}")


def track_reward(v_robot: float, v_target: float, v_max: float) -> float:
    """Speed-tracking reward: v_max * exp(-(v_R - v_T)^2 / (2 v_max^2))."""
    if v_max <= 0.0:
        raise ValueError("v_max must be > 0")
    err = v_robot - v_target
    return v_max * math.exp(-(err * err) / (2.0 * v_max * v_max))


def speed_profile(t: float, task: TaskSpec) -> float:
    """Commanded speed: ramp up from 0, hold at v_max, ramp back down to 0."""
    frac = t / task.episode_seconds
    f1, f2, f3 = task.profile_fracs
    if frac <= 0.0:
        return 0.0
    if frac < f1:
        return task.v_max * frac / f1
    if frac <= f2:
        return task.v_max
    if frac < f3:
        return task.v_max * (f3 - frac) / (f3 - f2)
    return 0.0


def perturbation_windows(seed: int, schedule: PerturbationSchedule, episode_seconds: float) -> np.ndarray:
    """Seeded non-overlapping force windows, one per episode segment.

    Rows are (t_start, t_end, fx, fz) with |fx| <= max_fx, |fz| <= max_fz.
    """
    rng = rng_for(seed, "perturb")
    n = schedule.events
    rows = np.zeros((n, 4))
    if n == 0:
        return rows
    seg = episode_seconds / n
    for i in range(n):
        span = max(seg - schedule.duration_s, 0.0)
        t0 = i * seg + rng.uniform(0.0, span)
        fx = rng.choice([-1.0, 1.0]) * rng.uniform(0.0, schedule.max_fx)
        fz = rng.choice([-1.0, 1.0]) * rng.uniform(0.0, schedule.max_fz)
        rows[i] = (t0, t0 + schedule.duration_s, fx, fz)
    return rows


def perturbation_force(t: float, windows: np.ndarray) -> tuple[float, float]:
    """Total external force at time t (windows are disjoint by construction)."""
    fx = 0.0
    fz = 0.0
    for t0, t1, wfx, wfz in windows:
        if t0 <= t < t1:
            fx += wfx
            fz += wfz
    return fx, fz


@dataclass
class BodyState:
    x: float
    z: float
    pitch: float
    xd: float
    zd: float
    pitch_rate: float
    sim_time: float


def fall_check(state: BodyState, model: RobotModel) -> bool:
    """Fallen when pitched past the limit or the body has collapsed."""
    return abs(state.pitch) > model.fall_pitch or state.z < model.fall_height_fraction * model.leg_length


def foot_kinematics(state: BodyState, leg_index: int, swing: float, extension: float, model: RobotModel) -> tuple[float, float]:
    """World foot position for one leg; raises when the commanded length is invalid."""
    leg = model.leg_length_at(extension)
    if leg <= model.min_leg_length:
        raise ModelError(f"leg {leg_index}: extension {extension} gives length {leg:.4f} <= minimum")
    bx = model.hip_offsets[leg_index] + leg * math.sin(swing)
    bz = -leg * math.cos(swing)
    c, s = math.cos(state.pitch), math.sin(state.pitch)
    return state.x + c * bx - s * bz, state.z + s * bx + c * bz


class QuadrupedEnv:
    """Speed-tracking episode driven by per-tick leg commands.

    One control step advances several physics substeps. Rewards track
    the scripted speed profile; episodes end on a fall or at the time
    limit. Fully deterministic given (seed, configuration).
    """

    def __init__(
        self,
        model: RobotModel | None = None,
        contact: ContactModel | None = None,
        task: TaskSpec | None = None,
        physics_dt: float = 1e-3,
        control_dt: float = 1e-2,
        reset_noise_height: float = 0.005,
        reset_noise_pitch: float = 0.01,
        reset_pose: LegCommand | None = None,
        reset_height: float | None = None,
        perturbations_enabled: bool = True,
    ):
        self.model = model if model is not None else RobotModel()
        self.contact = contact if contact is not None else ContactModel()
        self.task = task if task is not None else TaskSpec()
        if physics_dt <= 0.0 or control_dt < physics_dt:
            raise ModelError("need 0 < physics_dt <= control_dt")
        self.physics_dt = float(physics_dt)
        self.control_dt = float(control_dt)
        self.substeps = int(round(control_dt / physics_dt))
        self.reset_noise_height = float(reset_noise_height)
        self.reset_noise_pitch = float(reset_noise_pitch)
        self.reset_pose = reset_pose if reset_pose is not None else LegCommand.constant(0.0, self.model.extension_reference)
        self.reset_height = reset_height
        self.perturbations_enabled = perturbations_enabled
        self.max_control_steps = int(round(self.task.episode_seconds / self.control_dt))

        self._params = self._pack_params()
        self._state = np.zeros(STATE_SIZE)
        self._forces = np.zeros((NUM_LEGS, 2))
        self._windows = np.zeros((0, 4))
        self._step_count = 0
        self._started = False

    def _pack_params(self) -> np.ndarray:
        p = np.zeros(PARAM_SIZE)
        m, c = self.model, self.contact
        p[0], p[1], p[2], p[3], p[4] = m.mass, m.inertia, m.leg_length, m.extension_gain, m.extension_reference
        p[5:9] = m.hip_offsets
        p[9], p[10], p[11], p[12], p[13] = (
            c.normal_stiffness,
            c.normal_damping,
            c.tangential_stiffness,
            c.tangential_damping,
            c.friction,
        )
        p[14], p[15], p[16], p[17] = GRAVITY, self.physics_dt, m.servo_rate, m.min_leg_length
        return p

    @property
    def body_state(self) -> BodyState:
        s = self._state
        return BodyState(x=s[0], z=s[1], pitch=s[2], xd=s[3], zd=s[4], pitch_rate=s[5], sim_time=s[6])

    @property
    def forward_speed(self) -> float:
        return -self._state[3]

    @property
    def sim_time(self) -> float:
        return self._step_count * self.control_dt

    @property
    def current_target_speed(self) -> float:
        return speed_profile(self.sim_time, self.task)

    @property
    def joint_state(self) -> LegCommand:
        return LegCommand(swing=self._state[7:11].copy(), extension=self._state[11:15].copy())

    @property
    def contact_forces(self) -> np.ndarray:
        """(4, 2) array of (normal, tangential) forces from the last substep."""
        return self._forces.copy()

    def reset(self, seed: int) -> np.ndarray:
        rng = rng_for(seed, "quad_reset")
        pose = self.reset_pose
        if self.reset_height is not None:
            z0 = self.reset_height
        else:
            z0 = max(
                self.model.leg_length_at(pose.extension[i]) * math.cos(pose.swing[i]) for i in range(NUM_LEGS)
            )
        if self.reset_noise_height > 0.0:
            z0 -= abs(rng.normal(0.0, self.reset_noise_height))
        pitch0 = rng.normal(0.0, self.reset_noise_pitch) if self.reset_noise_pitch > 0.0 else 0.0

        s = self._state
        s[:] = 0.0
        s[1] = z0
        s[2] = pitch0
        s[7:11] = pose.swing
        s[11:15] = pose.extension
        body = self.body_state
        for i in range(NUM_LEGS):
            fx, fz = foot_kinematics(body, i, pose.swing[i], pose.extension[i], self.model)
            s[15 + i] = fx
            s[19 + i] = fz
        s[23:27] = s[15:19]
        s[27:31] = 0.0

        if self.perturbations_enabled and self.task.perturb.events > 0:
            self._windows = perturbation_windows(seed, self.task.perturb, self.task.episode_seconds)
        else:
            self._windows = np.zeros((0, 4))
        self._step_count = 0
        self._forces[:] = 0.0
        self._started = True
        return self._imu()

    def _imu(self) -> np.ndarray:
        return np.array([0.0, self._state[2], 0.0, self._state[5]])

    def step(self, command: LegCommand) -> tuple[np.ndarray, float, bool, dict]:
        if not self._started:
            raise RuntimeError("call reset() before step()")
        fx_ext, fz_ext = perturbation_force(self.sim_time, self._windows)
        status = step_physics(
            self._state,
            self._params,
            np.ascontiguousarray(command.swing, dtype=np.float64),
            np.ascontiguousarray(command.extension, dtype=np.float64),
            fx_ext,
            fz_ext,
            self.substeps,
            self._forces,
        )
        if status == 2:
            raise ModelError("commanded extension collapses a leg below the minimum length")
        if not np.isfinite(self._state).all():
            raise SimulationError(
                f"non-finite state at t={self.sim_time:.3f}s: {self._state[:6]}"
            )
        self._step_count += 1
        t = self.sim_time
        v_target = speed_profile(t, self.task)
        v = self.forward_speed
        reward = track_reward(v, v_target, self.task.v_max)
        fell = fall_check(self.body_state, self.model)
        done = fell or self._step_count >= self.max_control_steps
        info = {
            "t": t,
            "v_target": v_target,
            "v": v,
            "pitch": self._state[2],
            "fell": fell,
            "perturb_fx": fx_ext,
            "perturb_fz": fz_ext,
        }
        return self._imu(), reward, done, info
