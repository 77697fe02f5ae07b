"""Named RNG sub-streams so each randomized stage is independently reproducible."""
from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, label: str) -> np.random.Generator:
    """Derive an independent generator from a master seed and a stage label.

    The same (seed, label) pair always yields an identical stream; different
    labels give streams that do not collide even for the same seed.
    """
    return np.random.default_rng([seed, zlib.crc32(label.encode("utf-8"))])
