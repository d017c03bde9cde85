"""Time-frequency resource grid.

Subframes ``k`` and sub-bands ``f`` are 1-indexed on every public interface,
matching the usual drawing of the grid (k = 1..100 inside a 100 ms window).
Arrays used internally are 0-indexed; convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


@dataclass(frozen=True, order=True)
class SubchannelId:
    """One (sub-band, subframe) cell of the grid."""

    sub_band: int
    subframe: int

    def __post_init__(self):
        if self.sub_band < 1 or self.subframe < 1:
            raise ValueError(f"subchannel indices are 1-based, got {self}")


@dataclass(frozen=True)
class GridConfig:
    num_sub_bands: int = 1
    subchannels_per_band: int = 100
    window_ms: int = 100
    cam_rate_hz: float = 10.0

    def __post_init__(self):
        if self.num_sub_bands < 1:
            raise ValueError("num_sub_bands must be >= 1")
        if self.subchannels_per_band < 1:
            raise ValueError("subchannels_per_band must be >= 1")
        # one subframe is 1 ms, and a window spans one CAM period
        if self.subchannels_per_band != self.window_ms:
            raise ValueError(
                f"subchannels_per_band ({self.subchannels_per_band}) must equal "
                f"window_ms ({self.window_ms}) with 1 ms subframes"
            )
        if abs(self.window_ms - 1000.0 / self.cam_rate_hz) > 1e-9:
            raise ValueError(
                f"window_ms ({self.window_ms}) must equal 1000/cam_rate_hz "
                f"({1000.0 / self.cam_rate_hz:g})"
            )

    @property
    def F(self) -> int:
        return self.num_sub_bands

    @property
    def S(self) -> int:
        return self.subchannels_per_band

    @property
    def window_s(self) -> float:
        return self.window_ms / 1000.0

    def check(self, sc: SubchannelId) -> None:
        if not (1 <= sc.sub_band <= self.F and 1 <= sc.subframe <= self.S):
            raise ValueError(f"{sc} outside a {self.F}x{self.S} grid")


class WindowIndex(int):
    """Window counter since simulation start (0-based, one per T_w)."""

    def __new__(cls, n: int):
        if n < 0:
            raise ValueError("window index must be non-negative")
        return super().__new__(cls, n)

    def next(self) -> "WindowIndex":
        return WindowIndex(self + 1)

    def start_ms(self, cfg: GridConfig) -> int:
        return int(self) * cfg.window_ms


class GridPosition(NamedTuple):
    window: WindowIndex
    subframe: int


def subframe_of_time(t_ms: int, cfg: GridConfig) -> GridPosition:
    """Map an absolute time in ms onto (window, subframe)."""
    if t_ms < 0:
        raise ValueError("time must be non-negative")
    t_ms = int(t_ms)
    return GridPosition(WindowIndex(t_ms // cfg.window_ms), t_ms % cfg.window_ms + 1)


def same_subframe_set(k: int, cfg: GridConfig) -> frozenset[SubchannelId]:
    """All subchannels sharing subframe ``k`` across the F sub-bands."""
    if not 1 <= k <= cfg.S:
        raise ValueError(f"subframe {k} outside 1..{cfg.S}")
    return frozenset(SubchannelId(f, k) for f in range(1, cfg.F + 1))
