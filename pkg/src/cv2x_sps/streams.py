"""Seed-derived random streams.

Every stream is keyed by (master seed, purpose, optional vehicle id) through
``numpy.random.SeedSequence`` spawn keys, so the draws a stream produces do
not depend on how many other streams exist or in what order they are used.
That is what keeps the channel realization identical across K/F settings.
"""

from __future__ import annotations

import hashlib

import numpy as np

CHANNEL = 1
SELECT = 2
AUX = 3
MOBILITY = 4
BOOTSTRAP = 5


def vehicle_key(vehicle_id: str) -> int:
    digest = hashlib.blake2b(str(vehicle_id).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, purpose: int, vehicle_id: str | None = None) -> np.random.Generator:
    key = (purpose,) if vehicle_id is None else (purpose, vehicle_key(vehicle_id))
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))
