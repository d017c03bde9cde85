"""Mode-4 scheduler: power sensing, ranked-K selection, SPS counters, replicas."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ChannelConfig, ibe_matrix
from .plan import WindowPlan, band_powers
from .resource import GridConfig, SubchannelId

# sensed value of a subframe the vehicle itself transmitted in
UNSENSABLE = math.inf

DEFAULT_SPS_DURATIONS_S = tuple(round(0.5 + 0.1 * i, 1) for i in range(11))
AUX_POLICIES = ("window", "period")


class SelectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchedulerConfig:
    selectivity_k: int
    sps_duration_choices_s: tuple[float, ...] = DEFAULT_SPS_DURATIONS_S
    aux_redraw: str = "window"

    def __post_init__(self):
        object.__setattr__(self, "sps_duration_choices_s",
                           tuple(float(d) for d in self.sps_duration_choices_s))
        if self.selectivity_k < 1:
            raise ValueError("selectivity_k must be >= 1")
        if not self.sps_duration_choices_s:
            raise ValueError("sps_duration_choices_s must not be empty")
        if self.aux_redraw not in AUX_POLICIES:
            raise ValueError(f"aux_redraw must be one of {AUX_POLICIES}")

    def validate(self, grid: GridConfig) -> None:
        if self.selectivity_k > grid.S:
            raise ValueError(f"selectivity_k={self.selectivity_k} exceeds S={grid.S}")
        for d in self.sps_duration_choices_s:
            w = d * 1000.0 / grid.window_ms
            if d <= 0 or abs(w - round(w)) > 1e-6:
                raise ValueError(f"SPS duration {d} s is not a positive multiple of T_w")

    def duration_windows(self, grid: GridConfig) -> tuple[int, ...]:
        return tuple(int(round(d * 1000.0 / grid.window_ms)) for d in self.sps_duration_choices_s)


@dataclass(frozen=True)
class SpsState:
    primary: SubchannelId
    aux_subframes: tuple[int, ...]
    windows_remaining: int
    sps_duration_windows: int

    def __post_init__(self):
        if self.primary.sub_band != 1:
            raise ValueError("primary subchannel must be on sub-band 1")
        if not 1 <= self.windows_remaining <= self.sps_duration_windows:
            raise ValueError("windows_remaining outside 1..sps_duration_windows")

    @property
    def subframes(self) -> tuple[int, ...]:
        return (self.primary.subframe, *self.aux_subframes)


def sense_all(plan: WindowPlan, gains: np.ndarray, channel: ChannelConfig,
              powers: np.ndarray | None = None) -> np.ndarray:
    """Sensed primary-band power for every vehicle, shape (N, S), in mW.

    ``powers`` may pass a precomputed :func:`band_powers` tensor.
    """
    if powers is None:
        powers = band_powers(plan, gains, channel.tx_power_mw)
    w = ibe_matrix(plan.F, channel)[0]  # leakage of each band onto band 1
    sensed = np.tensordot(w, powers, axes=1).T  # (N, S)
    sensed = np.array(sensed, copy=True)
    sensed[plan.transmitting().T] = UNSENSABLE
    return sensed


def sense_powers(vehicle: int, plan: WindowPlan, gains: np.ndarray,
                 channel: ChannelConfig) -> np.ndarray:
    """Sensed power vector of one vehicle (index into ``plan.ids``)."""
    return sense_all(plan, gains, channel)[vehicle]


def rank_and_select(sensed: np.ndarray, K: int, rng: np.random.Generator) -> SubchannelId:
    """Pick uniformly among the K lowest-power sensable primary subchannels."""
    sensed = np.asarray(sensed, dtype=float)
    finite = np.flatnonzero(np.isfinite(sensed))
    if finite.size == 0:
        raise SelectionError("no sensable subchannel to select from")
    # stable sort: equal powers keep ascending subframe order
    ranked = finite[np.argsort(sensed[finite], kind="stable")]
    pool = ranked[:min(K, ranked.size)]
    return SubchannelId(1, int(pool[rng.integers(pool.size)]) + 1)


def draw_sps_duration(cfg: SchedulerConfig, grid: GridConfig, rng: np.random.Generator) -> int:
    choices = cfg.duration_windows(grid)
    return choices[int(rng.integers(len(choices)))]


def draw_aux_subframes(F: int, rng: np.random.Generator, S: int = 100) -> tuple[int, ...]:
    if F < 1:
        raise ValueError("F must be >= 1")
    if F == 1:
        return ()
    return tuple(rng.integers(1, S + 1, size=F - 1).tolist())


def initial_state(cfg: SchedulerConfig, grid: GridConfig, rng: np.random.Generator,
                  aux_rng: np.random.Generator | None = None) -> SpsState:
    """Bootstrap without sensing history: uniform primary and counter offset."""
    aux_rng = rng if aux_rng is None else aux_rng
    primary = SubchannelId(1, int(rng.integers(1, grid.S + 1)))
    n_w = draw_sps_duration(cfg, grid, rng)
    remaining = int(rng.integers(1, n_w + 1))
    return SpsState(primary, draw_aux_subframes(grid.F, aux_rng, grid.S), remaining, n_w)


def step_window(state: SpsState, sensed_provider: Callable[[], np.ndarray],
                cfg: SchedulerConfig, grid: GridConfig, rng: np.random.Generator,
                aux_rng: np.random.Generator | None = None) -> tuple[SpsState, bool]:
    """Advance one window; reselect from the just-elapsed window's sensing when due."""
    aux_rng = rng if aux_rng is None else aux_rng
    remaining = state.windows_remaining - 1
    if remaining > 0:
        aux = state.aux_subframes
        if cfg.aux_redraw == "window":
            aux = draw_aux_subframes(grid.F, aux_rng, grid.S)
        return SpsState(state.primary, aux, remaining, state.sps_duration_windows), False

    primary = rank_and_select(sensed_provider(), cfg.selectivity_k, rng)
    n_w = draw_sps_duration(cfg, grid, rng)
    aux = draw_aux_subframes(grid.F, aux_rng, grid.S)
    return SpsState(primary, aux, n_w, n_w), True
