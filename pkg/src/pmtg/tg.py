"""Parametric trajectory generators: gait phase math and open-loop leg shapes.

The trajectory generator is the only stateful piece of the control
architecture. Its phase advances once per control tick by a
policy-chosen frequency; everything else here is a pure function of
that phase, so states can be copied freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi

NUM_LEGS = 4
LEG_NAMES = ("front_left", "front_right", "back_left", "back_right")


class GaitError(ValueError):
    """Unknown gait name or invalid trajectory-generator configuration."""


def _check_finite(label, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{label}: non-finite input {v!r}")


@dataclass(frozen=True)
class TgState:
    """Generator phase, always wrapped to [0, 2*pi)."""

    phase: float = 0.0


@dataclass(frozen=True)
class TgModulation:
    """Per-tick generator parameters chosen by the policy.

    Range enforcement lives in the action squashing; this type re-checks
    only what the generator itself cannot tolerate.
    """

    frequency: float  # Hz, >= 0
    swing_amplitude: float  # rad, stride size
    walking_height: float  # rad, shared extension offset

    def __post_init__(self):
        _check_finite("TgModulation", self.frequency, self.swing_amplitude, self.walking_height)
        if self.frequency < 0.0:
            raise ValueError(f"frequency must be >= 0, got {self.frequency}")


@dataclass(frozen=True)
class TgConfig:
    """Fixed generator constants for one gait.

    Leg phase offsets are ordered (front-left, front-right, back-left,
    back-right); the front-left leg is the reference and must have
    offset 0.
    """

    swing_center: float = 0.0  # rad
    extension_swing_amplitude: float = 0.35  # rad, foot clearance in swing
    extension_asymmetry: float = 0.0  # rad, climbing bias
    stance_fraction: float = 0.5  # share of the cycle on the ground, in (0, 1)
    leg_phase_offsets: tuple[float, float, float, float] = (0.0, math.pi, math.pi, 0.0)
    dt: float = 0.01  # control period, s

    def __post_init__(self):
        if not 0.0 < self.stance_fraction < 1.0:
            raise GaitError(f"stance_fraction must be in (0, 1), got {self.stance_fraction}")
        if len(self.leg_phase_offsets) != NUM_LEGS:
            raise GaitError("leg_phase_offsets must have exactly 4 entries")
        if self.leg_phase_offsets[0] != 0.0:
            raise GaitError("front-left leg is the phase reference; its offset must be 0")
        for off in self.leg_phase_offsets:
            if not 0.0 <= off < TWO_PI:
                raise GaitError(f"leg phase offset {off} outside [0, 2*pi)")
        if self.dt <= 0.0:
            raise GaitError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class LegCommand:
    """Swing/extension targets for the four legs, in radians."""

    swing: np.ndarray  # (4,), order FL FR BL BR
    extension: np.ndarray  # (4,)

    def flat(self) -> np.ndarray:
        """Interleaved (S, E) per leg: [S_fl, E_fl, S_fr, E_fr, ...]."""
        out = np.empty(2 * NUM_LEGS)
        out[0::2] = self.swing
        out[1::2] = self.extension
        return out

    @staticmethod
    def from_flat(values) -> "LegCommand":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (2 * NUM_LEGS,):
            raise ValueError(f"expected 8 values, got shape {arr.shape}")
        return LegCommand(swing=arr[0::2].copy(), extension=arr[1::2].copy())

    @staticmethod
    def constant(swing: float, extension: float) -> "LegCommand":
        return LegCommand(np.full(NUM_LEGS, float(swing)), np.full(NUM_LEGS, float(extension)))


def advance_phase(state: TgState, frequency: float, dt: float) -> TgState:
    """Advance the generator phase by 2*pi*f*dt and wrap into [0, 2*pi)."""
    _check_finite("advance_phase", state.phase, frequency, dt)
    if frequency < 0.0:
        raise ValueError(f"frequency must be >= 0, got {frequency}")
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return TgState(phase=(state.phase + TWO_PI * frequency * dt) % TWO_PI)


def leg_phase(phase: float, offset: float) -> float:
    """Phase of one leg: generator phase plus the leg's gait offset, wrapped."""
    _check_finite("leg_phase", phase, offset)
    return (phase + offset) % TWO_PI


def warp_time(phi_leg, stance_fraction: float):
    """Warp a leg phase so swing and stance can occupy unequal time shares.

    Piecewise-linear map on [0, 2*pi): the swing part [0, 2*pi*(1-beta))
    stretches onto [0, pi), the stance part onto [pi, 2*pi). Continuous,
    monotone, identity at beta = 0.5. Accepts scalars or arrays.
    """
    beta = stance_fraction
    if not 0.0 < beta < 1.0:
        raise GaitError(f"stance_fraction must be in (0, 1), got {beta}")
    if isinstance(phi_leg, float):  # scalar fast path; this sits in the control loop
        if phi_leg < TWO_PI * (1.0 - beta):
            return phi_leg / (2.0 * (1.0 - beta))
        return TWO_PI - (TWO_PI - phi_leg) / (2.0 * beta)
    phi = np.asarray(phi_leg, dtype=float)
    boundary = TWO_PI * (1.0 - beta)
    swing = phi / (2.0 * (1.0 - beta))
    stance = TWO_PI - (TWO_PI - phi) / (2.0 * beta)
    out = np.where(phi < boundary, swing, stance)
    if np.ndim(phi_leg) == 0:
        return float(out)
    return out


def tg_leg_targets(state: TgState, mod: TgModulation, cfg: TgConfig) -> LegCommand:
    """Open-loop leg targets at the current phase; does not advance the phase.

    Per leg: S = C_s + a*cos(t'), E = h + A_e*sin(t') + theta*cos(t'),
    with t' the warped per-leg phase.
    """
    swing = np.empty(NUM_LEGS)
    extension = np.empty(NUM_LEGS)
    for i, offset in enumerate(cfg.leg_phase_offsets):
        tp = warp_time(leg_phase(state.phase, offset), cfg.stance_fraction)
        c, s = math.cos(tp), math.sin(tp)
        swing[i] = cfg.swing_center + mod.swing_amplitude * c
        extension[i] = mod.walking_height + cfg.extension_swing_amplitude * s + cfg.extension_asymmetry * c
    return LegCommand(swing=swing, extension=extension)


def figure_eight(t: float, a_x: float, a_y: float) -> tuple[float, float]:
    """Planar eight curve: x = a_x*sin(2*pi*t), y = (a_y/2)*sin(2*pi*t)*cos(2*pi*t)."""
    _check_finite("figure_eight", t, a_x, a_y)
    s = math.sin(TWO_PI * t)
    c = math.cos(TWO_PI * t)
    return a_x * s, 0.5 * a_y * s * c


# Default gait tables. Bound swings the front pair against the back pair
# (half-period phase difference); walk uses a trot-like diagonal pattern.
# The bound stance share is short so the gait has real flight phases.
_GAITS = {
    "walk": TgConfig(leg_phase_offsets=(0.0, math.pi, math.pi, 0.0), stance_fraction=0.5),
    "bound": TgConfig(leg_phase_offsets=(0.0, 0.0, math.pi, math.pi), stance_fraction=0.3),
}


def gait_names() -> tuple[str, ...]:
    return tuple(sorted(_GAITS))


def gait_table(name: str, **overrides) -> TgConfig:
    """Default TgConfig for a named gait, with optional field overrides."""
    try:
        base = _GAITS[name]
    except KeyError:
        raise GaitError(f"unknown gait {name!r}; expected one of {sorted(_GAITS)}") from None
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "leg_phase_offsets" in overrides:
        overrides["leg_phase_offsets"] = tuple(float(v) for v in overrides["leg_phase_offsets"])
    return replace(base, **overrides)
