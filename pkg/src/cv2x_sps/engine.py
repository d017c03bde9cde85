"""Window-by-window simulation driver.

Order inside every window: positions, shadowing update, plan assembly,
reception evaluation, metric accumulation, then each vehicle's SPS step
(which senses the window that just ended when its counter expires).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .channel import ShadowField, distance_matrix, gain_matrix
from .config import RunConfig, validate
from .metrics import (PowerCdfAccumulator, PrrAccumulator, loss_breakdown,
                      prr_values)
from .plan import WindowPlan
from .reception import evaluate_window
from .sps import SpsState, initial_state, sense_all, step_window
from .trace import MobilityTrace, snapshot_at

log = logging.getLogger(__name__)

__all__ = ["VehicleAgent", "SimulationResult", "WindowPlan", "bootstrap_vehicle",
           "init_fleet", "assemble_plan", "run"]


@dataclass
class VehicleAgent:
    vehicle_id: str
    state: SpsState
    rng: np.random.Generator
    aux_rng: np.random.Generator


@dataclass
class SimulationResult:
    prr: PrrAccumulator
    power_cdf: PowerCdfAccumulator
    metadata: dict = field(default_factory=dict)

    def prr_values(self) -> list[dict]:
        return prr_values(self.prr)

    def loss_breakdown(self) -> list[dict]:
        return loss_breakdown(self.prr)

    def prr_at(self, d_x: float, kind: str = "service") -> float | None:
        for row in self.prr_values():
            if row["d_x"] == float(d_x):
                return row[f"prr_{kind}"]
        raise KeyError(d_x)


def bootstrap_vehicle(vehicle_id: str, config: RunConfig, seed: int) -> VehicleAgent:
    rng = streams.stream(seed, streams.SELECT, vehicle_id)
    aux_rng = streams.stream(seed, streams.AUX, vehicle_id)
    state = initial_state(config.scheduler, config.grid, rng, aux_rng)
    return VehicleAgent(vehicle_id, state, rng, aux_rng)


def init_fleet(trace: MobilityTrace, config: RunConfig, seed: int) -> dict[str, VehicleAgent]:
    snap = snapshot_at(trace, 0, config.grid)
    if not snap.ids:
        raise ValueError("no vehicle present at window 0")
    return {vid: bootstrap_vehicle(vid, config, seed) for vid in snap.ids}


def assemble_plan(window: int, ids, fleet: dict[str, VehicleAgent], S: int) -> WindowPlan:
    sub = np.array([fleet[v].state.subframes for v in ids], dtype=np.int64)
    F = len(fleet[ids[0]].state.subframes) if ids else 1
    return WindowPlan(window, tuple(ids), sub.reshape(len(ids), F), S)


def run(config: RunConfig, trace: MobilityTrace, seed: int | None = None) -> SimulationResult:
    validate(config)
    config.channel.validate_bands(config.grid.F)
    seed = config.seed if seed is None else int(seed)
    grid, channel, sched = config.grid, config.channel, config.scheduler
    thresholds = config.thresholds

    n_windows = trace.num_windows(grid)
    if config.max_windows is not None:
        n_windows = min(n_windows, config.max_windows)
    if n_windows < 2:
        raise ValueError(f"trace covers {n_windows} window(s); at least 2 required")
    warmup = config.warmup_windows
    if warmup is None:
        warmup = max(sched.duration_windows(grid))

    channel_rng = streams.stream(seed, streams.CHANNEL)
    shadow = ShadowField(channel.shadow_sigma_db, channel.shadow_corr_dist_m)
    fleet: dict[str, VehicleAgent] = {}
    prr = PrrAccumulator(config.metrics.bins, config.metrics.cumulative)
    cdf = PowerCdfAccumulator()
    awareness = max(config.metrics.bins)
    fleet_sizes = []
    reselections = 0

    for n in range(n_windows):
        snap = snapshot_at(trace, n, grid)
        ids = snap.ids
        alive = set(ids)
        for vid in [v for v in fleet if v not in alive]:
            del fleet[vid]
        for vid in ids:
            if vid not in fleet:
                fleet[vid] = bootstrap_vehicle(vid, config, seed)
        fleet_sizes.append(len(ids))

        shadow_db = shadow.update(ids, snap.positions, channel_rng)
        if not ids:
            continue
        dist = distance_matrix(snap.positions)
        gains = gain_matrix(dist, shadow_db, channel)
        plan = assemble_plan(n, ids, fleet, grid.S)
        measuring = n >= warmup

        if measuring and len(ids) > 1:
            batch = evaluate_window(plan, dist, gains, channel, thresholds, awareness)
            prr.add_batch(batch)

        sensed = None
        for idx, vid in enumerate(ids):
            agent = fleet[vid]
            if agent.state.windows_remaining == 1 and sensed is None:
                sensed = sense_all(plan, gains, channel)
            agent.state, reselected = step_window(
                agent.state, lambda: sensed[idx], sched, grid, agent.rng, agent.aux_rng)
            if reselected:
                reselections += 1
                if measuring:
                    cdf.add(sensed[idx, agent.state.primary.subframe - 1])
        if n % 100 == 0:
            log.debug("window %d: %d vehicles", n, len(ids))

    metadata = {
        "seed": seed,
        "config_digest": config.digest(),
        "selectivity_k": sched.selectivity_k,
        "num_sub_bands": grid.F,
        "windows_simulated": n_windows,
        "warmup_windows": warmup,
        "mean_fleet_size": float(np.mean(fleet_sizes)),
        "reselections": reselections,
        "trace_vehicles": len(trace.ids),
    }
    return SimulationResult(prr, cdf, metadata)
