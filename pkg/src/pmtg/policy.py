"""Feed-forward policies with a deterministic flat-parameter layout.

Observations are a fixed 7-vector (IMU, control input, phase encoding);
actions are 11 raw channels that get squashed into 3 generator
parameters plus 8 per-leg corrections. Policies are immutable during
rollouts; only optimizers write parameter vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tg import NUM_LEGS, LegCommand, TgModulation

OBS_DIM = 7
ACT_DIM = 11


class PolicyShapeError(ValueError):
    """Parameter vector and declared layout disagree."""


def assemble_observation(imu, v_des: float, phase: float) -> np.ndarray:
    """Fixed observation layout: [roll, pitch, roll_rate, pitch_rate, v_des, sin, cos]."""
    imu = np.asarray(imu, dtype=float)
    if imu.shape != (4,):
        raise ValueError(f"imu must have 4 entries, got shape {imu.shape}")
    values = np.empty(OBS_DIM)
    values[0:4] = imu
    values[4] = v_des
    values[5] = math.sin(phase)
    values[6] = math.cos(phase)
    if not np.isfinite(values).all():
        raise ValueError(f"non-finite observation inputs: {values}")
    return values


@dataclass(frozen=True)
class PolicyShape:
    """Layout metadata for a flat parameter vector.

    linear: a bias-free (output x input) matrix, flattened row-major.
    mlp: two rectified-linear hidden layers and a linear output layer,
    all with biases, laid out [W1, b1, W2, b2, W3, b3] row-major.
    """

    kind: str  # "linear" | "mlp"
    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise PolicyShapeError(f"unknown policy kind {self.kind!r}")
        if self.input_dim < 1 or self.output_dim < 1:
            raise PolicyShapeError("input_dim and output_dim must be >= 1")
        if self.kind == "linear" and self.hidden:
            raise PolicyShapeError("linear policies take no hidden sizes")
        if self.kind == "mlp":
            if len(self.hidden) != 2:
                raise PolicyShapeError(f"mlp needs exactly two hidden layers, got {self.hidden}")
            for h in self.hidden:
                if not 1 <= h <= 200:
                    raise PolicyShapeError(f"hidden size {h} outside [1, 200]")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)


def param_count(shape: PolicyShape) -> int:
    """Exact number of flat parameters for a shape."""
    if shape.kind == "linear":
        return shape.input_dim * shape.output_dim
    dims = shape.layer_dims
    return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))


@dataclass
class PolicyParams:
    """A policy: its layout plus one flat float64 parameter vector."""

    shape: PolicyShape
    flat: np.ndarray

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=np.float64)
        expected = param_count(self.shape)
        if self.flat.shape != (expected,):
            raise PolicyShapeError(
                f"flat vector has shape {self.flat.shape}, layout {self.shape} needs ({expected},)"
            )

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.shape, self.flat.copy())


def init_params(shape: PolicyShape, rng: np.random.Generator | None = None, scale: float = 0.0) -> PolicyParams:
    """Zero-initialised params by default; Gaussian with `scale` when an rng is given."""
    n = param_count(shape)
    if rng is None or scale == 0.0:
        return PolicyParams(shape, np.zeros(n))
    return PolicyParams(shape, scale * rng.standard_normal(n))


def unpack_layers(flat: np.ndarray, shape: PolicyShape) -> list[tuple[np.ndarray, np.ndarray | None]]:
    """Views (no copies) of the (weight, bias) pairs inside a flat vector."""
    if shape.kind == "linear":
        w = flat.reshape(shape.output_dim, shape.input_dim)
        return [(w, None)]
    layers = []
    dims = shape.layer_dims
    pos = 0
    for i in range(len(dims) - 1):
        n_in, n_out = dims[i], dims[i + 1]
        w = flat[pos : pos + n_out * n_in].reshape(n_out, n_in)
        pos += n_out * n_in
        b = flat[pos : pos + n_out]
        pos += n_out
        layers.append((w, b))
    return layers


def policy_forward(params: PolicyParams, obs) -> np.ndarray:
    """Deterministic forward pass; obs may be a single vector or an (n, d) batch."""
    x = np.asarray(obs, dtype=float)
    single = x.ndim == 1
    if x.shape[-1] != params.shape.input_dim:
        raise PolicyShapeError(
            f"observation dim {x.shape[-1]} does not match input_dim {params.shape.input_dim}"
        )
    h = x if not single else x[None, :]
    layers = unpack_layers(params.flat, params.shape)
    for i, (w, b) in enumerate(layers):
        h = h @ w.T
        if b is not None:
            h = h + b
        if i < len(layers) - 1:
            h = np.maximum(h, 0.0)
    return h[0] if single else h


@dataclass(frozen=True)
class ActionBounds:
    """Squash targets for the 11 raw action channels.

    The first three channels map into [lo, hi] per channel; the 8 leg
    corrections map into [-feedback, +feedback].
    """

    frequency: tuple[float, float] = (0.0, 3.0)
    amplitude: tuple[float, float] = (0.0, 0.6)
    height: tuple[float, float] = (0.8, 1.6)
    feedback: float = 0.3

    def __post_init__(self):
        for name in ("frequency", "amplitude", "height"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} bounds must satisfy lo < hi, got ({lo}, {hi})")
        if self.feedback <= 0.0:
            raise ValueError(f"feedback range must be > 0, got {self.feedback}")

    def midpoint_modulation(self) -> TgModulation:
        return TgModulation(
            frequency=0.5 * sum(self.frequency),
            swing_amplitude=0.5 * sum(self.amplitude),
            walking_height=0.5 * sum(self.height),
        )


@dataclass(frozen=True)
class ActuatorLimits:
    """Hard clamp applied to summed leg commands before they reach the servos."""

    swing: tuple[float, float] = (-1.1, 1.1)
    extension: tuple[float, float] = (0.2, 2.8)


@dataclass(frozen=True)
class ActionBundle:
    """The split 11-dim action: generator modulation plus leg corrections."""

    tg_mod: TgModulation
    leg_feedback: np.ndarray  # (8,), interleaved (S, E) per leg, rad


def squash(raw, lo: float, hi: float):
    """Smooth monotone map of the real line into (lo, hi); 0 maps to the midpoint."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return mid + half * np.tanh(raw)


def unsquash(value, lo: float, hi: float):
    """Inverse of squash for values strictly inside (lo, hi)."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return np.arctanh((np.asarray(value, dtype=float) - mid) / half)


def split_and_squash(raw, bounds: ActionBounds) -> ActionBundle:
    """Map 11 raw channels onto bounded generator parameters and corrections."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (ACT_DIM,):
        raise ValueError(f"expected {ACT_DIM} raw action channels, got shape {raw.shape}")
    if not np.isfinite(raw).all():
        raise ValueError(f"non-finite raw action: {raw}")
    mod = TgModulation(
        frequency=float(squash(raw[0], *bounds.frequency)),
        swing_amplitude=float(squash(raw[1], *bounds.amplitude)),
        walking_height=float(squash(raw[2], *bounds.height)),
    )
    fb = squash(raw[3:], -bounds.feedback, bounds.feedback)
    return ActionBundle(tg_mod=mod, leg_feedback=fb)


def compose_action(u_tg: LegCommand, u_fb, limits: ActuatorLimits) -> LegCommand:
    """Sum generator output and policy correction, then clamp to actuator limits."""
    fb = np.asarray(u_fb, dtype=float)
    if fb.shape != (2 * NUM_LEGS,):
        raise ValueError(f"expected 8 corrections, got shape {fb.shape}")
    total = u_tg.flat() + fb
    cmd = LegCommand.from_flat(total)
    return LegCommand(
        swing=np.clip(cmd.swing, *limits.swing),
        extension=np.clip(cmd.extension, *limits.extension),
    )
