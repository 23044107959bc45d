"""Deterministic seed derivation.

All randomness in a run flows from one master seed through named
streams, so any component can be re-seeded identically regardless of
execution order or worker count. Python's built-in hash() is salted
per process and must not be used here.
"""

from __future__ import annotations

import hashlib

import numpy as np


def seed_for(*parts) -> int:
    """Stable 63-bit seed derived from a tuple of ints/strings."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(seed_for(*parts))
