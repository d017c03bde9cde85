"""Per-window transmission plan shared by sensing and reception."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .resource import SubchannelId, WindowIndex


@dataclass(frozen=True, eq=False)
class WindowPlan:
    """Occupied subchannels of every active vehicle in one window.

    ``subframes[i, f-1]`` is the 1-based subframe vehicle ``ids[i]`` uses on
    sub-band ``f``; column 0 is the semi-persistent primary, the rest are the
    auxiliary replicas.
    """

    window: WindowIndex
    ids: tuple[str, ...]
    subframes: np.ndarray
    S: int = 100

    def __post_init__(self):
        sf = np.asarray(self.subframes, dtype=np.int64)
        if sf.ndim != 2 or sf.shape[0] != len(self.ids):
            raise ValueError("subframes must be (num_vehicles, F)")
        if sf.size and (sf.min() < 1 or sf.max() > self.S):
            raise ValueError(f"subframes must lie in 1..{self.S}")
        sf.setflags(write=False)
        object.__setattr__(self, "subframes", sf)

    @property
    def F(self) -> int:
        return self.subframes.shape[1]

    @property
    def num_vehicles(self) -> int:
        return len(self.ids)

    def subchannels(self, i: int) -> frozenset[SubchannelId]:
        return frozenset(SubchannelId(f + 1, int(k)) for f, k in enumerate(self.subframes[i]))

    def occupancy(self) -> np.ndarray:
        """Boolean (F, S, N): vehicle n transmits on (band f, subframe k)."""
        N, F = self.subframes.shape
        occ = np.zeros((F, self.S, N), dtype=bool)
        f_idx = np.broadcast_to(np.arange(F), (N, F))
        n_idx = np.broadcast_to(np.arange(N)[:, None], (N, F))
        occ[f_idx, self.subframes - 1, n_idx] = True
        return occ

    def transmitting(self) -> np.ndarray:
        """Boolean (S, N): vehicle n transmits on any band in subframe k."""
        return self.occupancy().any(axis=0)


def band_powers(plan: WindowPlan, gains: np.ndarray, tx_power_mw: float) -> np.ndarray:
    """``R[p, k, i]``: total power vehicle i receives from band-p transmissions in subframe k.

    ``gains`` must have a zero diagonal.
    """
    occ = plan.occupancy().astype(float)
    F, S, N = occ.shape
    return (tx_power_mw * (occ.reshape(F * S, N) @ gains.T)).reshape(F, S, N)
