"""Policy checkpoints: one human-readable header line, then the flat
parameter vector as little-endian float64.

Header floats are written with repr() so text round-trips bit-exactly.
Observation-normalizer statistics ride along in the header when the
policy was trained with normalization; without them a normalized policy
would not reproduce its behavior.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .optim.normalizer import RunningNormalizer
from .policy import PolicyParams, PolicyShape, param_count

MAGIC = "pmtg-checkpoint"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


class CorruptHeaderError(CheckpointError):
    pass


class LengthMismatchError(CheckpointError):
    pass


class HashMismatchError(CheckpointError):
    pass


def _fmt_floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(text: str) -> list[float]:
    if text == "":
        return []
    return [float(v) for v in text.split(",")]


def save_checkpoint(
    path,
    params: PolicyParams,
    seed: int,
    config_hash: str,
    bounds_text: str = "-",
    normalizer: RunningNormalizer | None = None,
) -> None:
    shape = params.shape
    fields = {
        "v": str(VERSION),
        "kind": shape.kind,
        "input_dim": str(shape.input_dim),
        "output_dim": str(shape.output_dim),
        "hidden": ",".join(str(h) for h in shape.hidden) or "-",
        "n_params": str(params.flat.size),
        "seed": str(seed),
        "config_hash": config_hash,
        "bounds": bounds_text,
    }
    if normalizer is not None and normalizer.count > 0:
        fields["norm_count"] = repr(float(normalizer.count))
        fields["norm_mean"] = _fmt_floats(normalizer.mean)
        fields["norm_m2"] = _fmt_floats(normalizer.m2)
    header = MAGIC + " " + " ".join(f"{k}={v}" for k, v in fields.items()) + "\n"
    blob = np.ascontiguousarray(params.flat, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(blob)


def load_checkpoint(path, expected_config_hash: str | None = None, force: bool = False):
    """Returns (params, meta). meta holds seed, config_hash, bounds text and
    the reconstructed normalizer (or None)."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CorruptHeaderError(f"{path}: no header line found")
    try:
        header = raw[:nl].decode("ascii")
    except UnicodeDecodeError as exc:
        raise CorruptHeaderError(f"{path}: header is not ascii text") from exc
    parts = header.split(" ")
    if parts[0] != MAGIC:
        raise CorruptHeaderError(f"{path}: expected {MAGIC!r} header, got {parts[0]!r}")
    fields = {}
    for item in parts[1:]:
        if "=" not in item:
            raise CorruptHeaderError(f"{path}: malformed header item {item!r}")
        k, v = item.split("=", 1)
        fields[k] = v
    try:
        hidden = () if fields["hidden"] == "-" else tuple(int(h) for h in fields["hidden"].split(","))
        shape = PolicyShape(fields["kind"], int(fields["input_dim"]), int(fields["output_dim"]), hidden)
        n_params = int(fields["n_params"])
    except (KeyError, ValueError) as exc:
        raise CorruptHeaderError(f"{path}: bad header fields: {exc}") from exc
    if n_params != param_count(shape):
        raise CorruptHeaderError(f"{path}: header n_params={n_params} does not match layout {shape}")

    blob = raw[nl + 1 :]
    if len(blob) != 8 * n_params:
        raise LengthMismatchError(f"{path}: expected {8 * n_params} payload bytes, found {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f8").astype(np.float64)
    params = PolicyParams(shape, flat)

    stored_hash = fields.get("config_hash", "")
    if expected_config_hash is not None and stored_hash != expected_config_hash:
        msg = f"{path}: checkpoint config_hash={stored_hash} != expected {expected_config_hash}"
        if not force:
            raise HashMismatchError(msg)
        import warnings

        warnings.warn(msg + " (proceeding under --force)", stacklevel=2)

    normalizer = None
    if "norm_count" in fields:
        normalizer = RunningNormalizer.from_state(
            shape.input_dim,
            (
                float(fields["norm_count"]),
                np.array(_parse_floats(fields.get("norm_mean", ""))),
                np.array(_parse_floats(fields.get("norm_m2", ""))),
            ),
        )
        if normalizer.mean.size != shape.input_dim or normalizer.m2.size != shape.input_dim:
            raise CorruptHeaderError(f"{path}: normalizer stats do not match input_dim")
    meta = {
        "seed": int(fields.get("seed", "0")),
        "config_hash": stored_hash,
        "bounds": fields.get("bounds", "-"),
        "normalizer": normalizer,
    }
    return params, meta
