"""Link gains: pathloss, spatially correlated shadowing, antenna gains, IBE.

All powers are handled in mW when linear and dBm/dB otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE_M = 1.0


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class B1Params:
    """WINNER+ B1 (urban micro-cell) LOS constants.

    ``PL = near_slope*log10(d) + near_intercept + near_freq*log10(fc/5)`` up to
    the breakpoint ``4*h1'*h2'*fc/c`` (``h' = h - env_height``), and
    ``far_slope*log10(d) + far_intercept - height_coef*log10(h1'*h2') +
    far_freq*log10(fc/5)`` beyond it.  The defaults are the usual V2V
    choice of 1.5 m antennas on both ends.
    """

    tx_height_m: float = 1.5
    rx_height_m: float = 1.5
    env_height_m: float = 1.0
    near_slope: float = 22.7
    near_intercept: float = 41.0
    near_freq: float = 20.0
    far_slope: float = 40.0
    far_intercept: float = 9.45
    height_coef: float = 17.3
    far_freq: float = 2.7

    def breakpoint_m(self, fc_ghz: float) -> float:
        h1 = self.tx_height_m - self.env_height_m
        h2 = self.rx_height_m - self.env_height_m
        return 4.0 * h1 * h2 * fc_ghz * 1e9 / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ChannelConfig:
    tx_power_dbm: float = 23.0
    antenna_gain_db: float = 3.0
    shadow_sigma_db: float = 7.0
    shadow_corr_dist_m: float = 10.0
    carrier_freq_ghz: float = 5.9
    ibe_vector: tuple[float, ...] = (1.0, 1e-3, 1e-4)
    noise_power_dbm: float = -103.4
    sensitivity_dbm: float = -103.4
    # physical slot of each logical sub-band inside the ITS channel; None means
    # contiguous (band f sits in slot f)
    band_slots: tuple[int, ...] | None = None
    b1: B1Params = field(default_factory=B1Params)

    def __post_init__(self):
        ibe = tuple(float(v) for v in self.ibe_vector)
        object.__setattr__(self, "ibe_vector", ibe)
        if not ibe or ibe[0] != 1.0:
            raise ValueError("ibe_vector[0] must be 1 (co-channel weight)")
        if any(not (0.0 < w <= 1.0) for w in ibe):
            raise ValueError("ibe weights must lie in (0, 1]")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be >= 0")
        if self.shadow_corr_dist_m <= 0:
            raise ValueError("shadow_corr_dist_m must be > 0")
        if self.carrier_freq_ghz <= 0:
            raise ValueError("carrier_freq_ghz must be > 0")
        if self.band_slots is not None:
            slots = tuple(int(s) for s in self.band_slots)
            if slots[0] != 1 or len(set(slots)) != len(slots) or min(slots) < 1:
                raise ValueError("band_slots must be distinct, 1-based, starting at 1")
            object.__setattr__(self, "band_slots", slots)

    @property
    def tx_power_mw(self) -> float:
        return float(db_to_linear(self.tx_power_dbm))

    @property
    def noise_mw(self) -> float:
        return float(db_to_linear(self.noise_power_dbm))

    def slot(self, f: int) -> int:
        if self.band_slots is None:
            return f
        return self.band_slots[f - 1]

    def validate_bands(self, num_sub_bands: int) -> None:
        """Reject band layouts the IBE vector cannot describe."""
        if self.band_slots is not None and len(self.band_slots) < num_sub_bands:
            raise ValueError(
                f"band_slots has {len(self.band_slots)} entries for F={num_sub_bands}")
        slots = [self.slot(f) for f in range(1, num_sub_bands + 1)]
        span = max(slots) - min(slots) + 1
        if span > len(self.ibe_vector):
            raise ValueError(
                f"F={num_sub_bands} needs an ibe_vector of length >= {span}, "
                f"got {len(self.ibe_vector)}")


def free_space_db(distance_m, fc_ghz: float):
    d = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M)
    return 20.0 * np.log10(4.0 * math.pi * d * fc_ghz * 1e9 / SPEED_OF_LIGHT)


def b1_pathloss_db(distance_m, fc_ghz: float, p: B1Params = B1Params()):
    d = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M)
    h1 = p.tx_height_m - p.env_height_m
    h2 = p.rx_height_m - p.env_height_m
    f_term = math.log10(fc_ghz / 5.0)
    near = p.near_slope * np.log10(d) + p.near_intercept + p.near_freq * f_term
    far = (p.far_slope * np.log10(d) + p.far_intercept
           - p.height_coef * math.log10(h1 * h2) + p.far_freq * f_term)
    return np.where(d <= p.breakpoint_m(fc_ghz), near, far)


def pathloss_db(distance_m, cfg: ChannelConfig = ChannelConfig()):
    """max(free space, B1) in dB. Distances are floored at 1 m."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d >= 0)):
        raise ValueError("distance must be non-negative")
    out = np.maximum(free_space_db(d, cfg.carrier_freq_ghz),
                     b1_pathloss_db(d, cfg.carrier_freq_ghz, cfg.b1))
    return float(out) if out.ndim == 0 else out


def ibe_weight(f: int, p: int, cfg: ChannelConfig = ChannelConfig()) -> float:
    """Leakage weight of a transmission on sub-band ``p`` seen on sub-band ``f``."""
    if f < 1 or p < 1:
        raise ValueError("sub-bands are 1-based")
    sep = abs(cfg.slot(p) - cfg.slot(f))
    if sep >= len(cfg.ibe_vector):
        raise ValueError(f"band separation {sep} exceeds ibe_vector length")
    return cfg.ibe_vector[sep]


def ibe_matrix(num_sub_bands: int, cfg: ChannelConfig) -> np.ndarray:
    """``W[f-1, p-1] = ibe_weight(f, p)``."""
    F = num_sub_bands
    return np.array([[ibe_weight(f, p, cfg) for p in range(1, F + 1)]
                     for f in range(1, F + 1)])


def gudmundson_step(old_db, delta_d_m, corr_dist_m: float, sigma_db: float, z):
    """One exponentially correlated shadowing update (AR(1) in space)."""
    rho = np.exp(-np.asarray(delta_d_m, dtype=float) / corr_dist_m)
    return rho * old_db + np.sqrt(np.maximum(0.0, 1.0 - rho * rho)) * sigma_db * z


class ShadowField:
    """Symmetric pairwise shadowing (dB) over the vehicles currently alive.

    Every update draws one standard normal per unordered pair of the current
    fleet, in fleet order, so the realization depends only on the trace and
    the channel stream.  Pairs that did not exist before get ``rho = 0``.
    The decorrelation distance of a pair is the displacement of its midpoint
    since the previous draw.
    """

    def __init__(self, sigma_db: float, corr_dist_m: float):
        self.sigma_db = sigma_db
        self.corr_dist_m = corr_dist_m
        self.ids: tuple[str, ...] = ()
        self.values_db = np.zeros((0, 0))
        self.positions = np.zeros((0, 2))
        self._pair: dict[tuple[str, str], tuple[float, np.ndarray]] = {}

    def update(self, ids, positions, rng: np.random.Generator) -> np.ndarray:
        ids = tuple(ids)
        positions = np.asarray(positions, dtype=float).reshape(len(ids), 2)
        n = len(ids)
        if ids == self.ids:
            old = self.values_db
            known = ~np.eye(n, dtype=bool)
            disp = positions - self.positions
        else:
            old_index = {v: i for i, v in enumerate(self.ids)}
            keep_new = np.array([i for i, v in enumerate(ids) if v in old_index], dtype=np.int64)
            keep_old = np.array([old_index[ids[i]] for i in keep_new], dtype=np.int64)
            old = np.zeros((n, n))
            known = np.zeros((n, n), dtype=bool)
            disp = np.zeros((n, 2))
            if len(keep_new):
                old[np.ix_(keep_new, keep_new)] = self.values_db[np.ix_(keep_old, keep_old)]
                known[np.ix_(keep_new, keep_new)] = True
                disp[keep_new] = positions[keep_new] - self.positions[keep_old]

        # one innovation per unordered pair, drawn in upper-triangle order
        iu, ju = np.triu_indices(n, k=1)
        z = np.zeros((n, n))
        z[iu, ju] = rng.standard_normal(len(iu))
        z += z.T
        mx = disp[:, 0][:, None] + disp[:, 0][None, :]
        my = disp[:, 1][:, None] + disp[:, 1][None, :]
        delta = np.where(known, 0.5 * np.sqrt(mx * mx + my * my), np.inf)
        out = gudmundson_step(old, delta, self.corr_dist_m, self.sigma_db, z)
        np.fill_diagonal(out, 0.0)
        self.ids, self.values_db, self.positions = ids, out, positions
        return out

    def update_pair(self, pair, new_positions, rng: np.random.Generator) -> float:
        """Scalar update of one pair, independent of the fleet matrix."""
        i, j = sorted(pair)
        key = (i, j)
        pi, pj = (np.asarray(new_positions[v], dtype=float) for v in (i, j))
        mid = 0.5 * (pi + pj)
        z = rng.standard_normal()
        if key not in self._pair:
            val = float(self.sigma_db * z)
        else:
            old, old_mid = self._pair[key]
            dd = float(np.hypot(*(mid - old_mid)))
            val = float(gudmundson_step(old, dd, self.corr_dist_m, self.sigma_db, z))
        self._pair[key] = (val, mid)
        return val

    def value(self, i: str, j: str) -> float:
        if i == j:
            return 0.0
        idx = {v: n for n, v in enumerate(self.ids)}
        if i in idx and j in idx:
            return float(self.values_db[idx[i], idx[j]])
        return self._pair[tuple(sorted((i, j)))][0]


def distance_matrix(positions) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    dx = np.subtract.outer(p[:, 0], p[:, 0])
    dy = np.subtract.outer(p[:, 1], p[:, 1])
    return np.sqrt(dx * dx + dy * dy)


def link_gain_linear(distance_m, shadow_db, cfg: ChannelConfig = ChannelConfig()):
    """g = Gt*Gr / (X * PL), all in linear units."""
    g_db = 2.0 * cfg.antenna_gain_db - np.asarray(shadow_db, dtype=float) - pathloss_db(distance_m, cfg)
    out = db_to_linear(g_db)
    return float(out) if out.ndim == 0 else out


def gain_matrix(distances: np.ndarray, shadow_db: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """Pairwise linear gains with a zero diagonal (no self-link)."""
    g = link_gain_linear(distances, shadow_db, cfg)
    g = np.array(g, dtype=float, copy=True)
    np.fill_diagonal(g, 0.0)
    return g
