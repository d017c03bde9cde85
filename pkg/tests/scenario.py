"""Shared dense synthetic scenario for trend checks (memoized per session)."""

from __future__ import annotations

from functools import lru_cache

from cv2x_sps import streams
from cv2x_sps.config import loads_config
from cv2x_sps.engine import run
from cv2x_sps.trace import SyntheticParams, generate_synthetic

# 300 vehicles on a 2 km, 2x2-lane highway, 60 s simulated
DENSE = SyntheticParams(num_vehicles=300, road_length_m=2000.0, lanes_per_direction=2,
                        speed_min_mps=10.0, speed_max_mps=20.0, duration_s=60.0)
SEEDS = (11, 12, 13, 14, 15)

# small scenario used by the many-seed property checks
SMALL = SyntheticParams(num_vehicles=100, road_length_m=1000.0, duration_s=6.0)


def config(k: int, f: int, **sections):
    text = f"[scheduler]\nselectivity_k = {k}\n[grid]\nnum_sub_bands = {f}\n"
    for name, body in sections.items():
        text += f"[{name}]\n{body}\n"
    return loads_config(text)


@lru_cache(maxsize=None)
def trace_for(params: SyntheticParams, seed: int):
    return generate_synthetic(params, streams.stream(seed, streams.MOBILITY))


@lru_cache(maxsize=None)
def dense_run(k: int, f: int, seed: int):
    return run(config(k, f), trace_for(DENSE, seed), seed)


@lru_cache(maxsize=None)
def small_run(k: int, f: int, seed: int):
    return run(config(k, f), trace_for(SMALL, seed), seed)
