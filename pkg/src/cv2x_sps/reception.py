"""SINR evaluation and decode/loss classification for every in-range link."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator

import numpy as np

from .channel import ChannelConfig, ibe_matrix, linear_to_db
from .plan import WindowPlan
from .resource import SubchannelId, WindowIndex


class Outcome(IntEnum):
    DECODED = 0
    LOST_HALF_DUPLEX = 1
    LOST_PROPAGATION = 2
    LOST_INTERFERENCE = 3


def gamma_t(rho: float, lam: float) -> float:
    """Decode SINR threshold in dB from coded throughput and loss coefficient."""
    if rho <= 0 or lam <= 0:
        raise ValueError("rho and lambda must be positive")
    return 10.0 * math.log10(2.0 ** (rho / lam) - 1.0)


@dataclass(frozen=True)
class DecodeThresholds:
    rho_bps_hz: float = 0.916
    lam: float = 0.6
    sensitivity_dbm: float = -103.4

    @property
    def gamma_t_db(self) -> float:
        return gamma_t(self.rho_bps_hz, self.lam)


@dataclass(frozen=True)
class ReceptionRecord:
    tx: str
    rx: str
    subchannel: SubchannelId
    window: WindowIndex
    distance_m: float
    rx_power_dbm: float
    sinr_db: float | None
    outcome: Outcome


def sinr(rx: int, tx: int, subchannel: SubchannelId, plan: WindowPlan,
         gains: np.ndarray, channel: ChannelConfig) -> float:
    """Linear SINR at ``rx`` of the copy ``tx`` sends on ``subchannel``.

    Interference comes from every other vehicle active in the same subframe,
    each of its bands weighted by the IBE leakage onto ``subchannel.sub_band``.
    """
    f, k = subchannel.sub_band, subchannel.subframe
    if rx == tx:
        raise ValueError("rx and tx must differ")
    occ = plan.occupancy()[:, k - 1, :]  # (F, N)
    if not occ[f - 1, tx]:
        raise ValueError(f"vehicle {tx} does not transmit on {subchannel}")
    if occ[:, rx].any():
        raise ValueError("receiver transmits in this subframe (half-duplex)")
    leak = ibe_matrix(plan.F, channel)[f - 1] @ occ
    leak[[rx, tx]] = 0.0
    p = channel.tx_power_mw
    interference = p * float(np.dot(leak, gains[rx]))
    return p * gains[rx, tx] / (interference + channel.noise_mw)


def classify_outcome(half_duplex: bool, rx_power_dbm: float, sinr_db: float | None,
                     thresholds: DecodeThresholds) -> Outcome:
    if half_duplex:
        return Outcome.LOST_HALF_DUPLEX
    if rx_power_dbm < thresholds.sensitivity_dbm:
        return Outcome.LOST_PROPAGATION
    if sinr_db is None or not sinr_db > thresholds.gamma_t_db:
        return Outcome.LOST_INTERFERENCE
    return Outcome.DECODED


def classify_many(half_duplex, rx_power_dbm, sinr_db, thresholds: DecodeThresholds) -> np.ndarray:
    """Vectorized :func:`classify_outcome` (same precedence)."""
    hd = np.asarray(half_duplex, dtype=bool)
    pw = np.broadcast_to(np.asarray(rx_power_dbm, dtype=float), hd.shape)
    sn = np.asarray(sinr_db, dtype=float)
    out = np.full(hd.shape, Outcome.DECODED, dtype=np.int8)
    with np.errstate(invalid="ignore"):
        out[~(sn > thresholds.gamma_t_db)] = Outcome.LOST_INTERFERENCE
    out[pw < thresholds.sensitivity_dbm] = Outcome.LOST_PROPAGATION
    out[hd] = Outcome.LOST_HALF_DUPLEX
    return out


@dataclass(frozen=True, eq=False)
class ReceptionBatch:
    """All decode attempts of one window, one row per (tx, rx) link.

    Per-copy columns have shape (links, F); column f-1 is the copy sent on
    sub-band f.
    """

    window: WindowIndex
    ids: tuple[str, ...]
    tx: np.ndarray
    rx: np.ndarray
    distance_m: np.ndarray
    rx_power_dbm: np.ndarray
    subframe: np.ndarray
    sinr_db: np.ndarray
    outcome: np.ndarray

    @property
    def F(self) -> int:
        return self.outcome.shape[1]

    def __len__(self):
        """Number of individual records (links times copies)."""
        return self.outcome.size

    def records(self) -> Iterator[ReceptionRecord]:
        for n in range(len(self.tx)):
            for f in range(self.F):
                s = self.sinr_db[n, f]
                yield ReceptionRecord(
                    tx=self.ids[self.tx[n]], rx=self.ids[self.rx[n]],
                    subchannel=SubchannelId(f + 1, int(self.subframe[n, f])),
                    window=self.window, distance_m=float(self.distance_m[n]),
                    rx_power_dbm=float(self.rx_power_dbm[n]),
                    sinr_db=None if np.isnan(s) else float(s),
                    outcome=Outcome(int(self.outcome[n, f])),
                )


def link_interference(plan: WindowPlan, gains: np.ndarray, channel: ChannelConfig,
                      tx: np.ndarray, rx: np.ndarray) -> np.ndarray:
    """Interference (mW) on every copy of every (tx, rx) link, shape (links, F).

    Per subframe, the m active vehicles form an (m x m) "everyone but me"
    mask, so each term is summed over the other transmitters directly.  The
    wanted signal is never subtracted from a total, which keeps weak
    interference next to a strong signal at full relative precision.
    """
    N, F = plan.subframes.shape
    occ = plan.occupancy()
    active = occ.any(axis=0)
    W = ibe_matrix(F, channel)
    p = channel.tx_power_mw

    k_flat = (plan.subframes[tx] - 1).ravel()
    band_flat = np.tile(np.arange(F), len(tx))
    tx_flat = np.repeat(tx, F)
    rx_flat = np.repeat(rx, F)
    order = np.argsort(k_flat, kind="stable")
    bounds = np.searchsorted(k_flat[order], np.arange(plan.S + 1))
    pos = np.zeros(N, dtype=np.int64)
    out = np.zeros(len(k_flat))
    for k in np.flatnonzero(np.diff(bounds)):
        e = order[bounds[k]:bounds[k + 1]]
        L = np.flatnonzero(active[k])
        pos[L] = np.arange(len(L))
        leak = W @ occ[:, k, L].astype(float)            # (F, m)
        pg = p * gains.T[L]                              # (m, N)
        interf = (leak[:, None, :] * (1.0 - np.eye(len(L)))) @ pg  # (F, m, N)
        out[e] = interf[band_flat[e], pos[tx_flat[e]], rx_flat[e]]
    return out.reshape(len(tx), F)


def evaluate_window(plan: WindowPlan, distances: np.ndarray, gains: np.ndarray,
                    channel: ChannelConfig, thresholds: DecodeThresholds,
                    awareness_limit: float) -> ReceptionBatch:
    N, F = plan.subframes.shape
    in_range = (distances <= awareness_limit) & ~np.eye(N, dtype=bool)
    tx, rx = np.nonzero(in_range)
    p = channel.tx_power_mw
    signal = p * gains[rx, tx]
    rx_power_dbm = linear_to_db(signal)
    subframe = plan.subframes[tx]                         # (links, F)
    busy = plan.transmitting()                            # (S, N)
    hd = busy[subframe - 1, rx[:, None]]

    i_links = link_interference(plan, gains, channel, tx, rx)
    with np.errstate(divide="ignore"):
        sinr_db = linear_to_db(signal[:, None] / (i_links + channel.noise_mw))
    sinr_db[hd] = np.nan
    outcome = classify_many(hd, rx_power_dbm[:, None], sinr_db, thresholds)
    return ReceptionBatch(
        window=WindowIndex(plan.window), ids=plan.ids, tx=tx, rx=rx,
        distance_m=distances[tx, rx], rx_power_dbm=rx_power_dbm, subframe=subframe,
        sinr_db=sinr_db, outcome=outcome,
    )
