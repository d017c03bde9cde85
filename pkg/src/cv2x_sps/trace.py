"""Vehicle mobility traces: CSV loading, SUMO FCD conversion, synthetic highways.

The CSV format is header-less ``time_s,vehicle_id,x_m,y_m`` lines.  Positions
are reconstructed by linear interpolation between the samples of each vehicle,
and a vehicle only exists between its first and last sample.
"""

from __future__ import annotations

import io
import math
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .resource import GridConfig, WindowIndex


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, eq=False)
class MobilityTrace:
    """Time-sorted samples.

    ``vehicle_index[n]`` points into ``ids``; ids are kept in first-appearance
    order so that every derived ordering is reproducible.
    """

    times: np.ndarray
    vehicle_index: np.ndarray
    x: np.ndarray
    y: np.ndarray
    ids: tuple[str, ...]
    _by_vehicle: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("times", "x", "y"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        vi = np.asarray(self.vehicle_index, dtype=np.int64)
        vi.setflags(write=False)
        object.__setattr__(self, "vehicle_index", vi)
        if len(self.times) == 0:
            raise TraceFormatError("trace is empty")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("trace samples must be sorted by time")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.x))
                and np.all(np.isfinite(self.y))):
            raise ValueError("trace contains non-finite values")
        # per-vehicle contiguous view, ordered by time
        order = np.lexsort((self.times, vi))
        counts = np.bincount(vi, minlength=len(self.ids))
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        t_sorted = self.times[order]
        v_sorted = vi[order]
        same = v_sorted[1:] == v_sorted[:-1]
        if np.any(same & (t_sorted[1:] == t_sorted[:-1])):
            raise ValueError("duplicate (time, vehicle_id) sample")
        object.__setattr__(self, "_by_vehicle", (
            t_sorted, self.x[order], self.y[order], starts, counts,
        ))

    @property
    def start_time(self) -> float:
        return float(self.times[0])

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    @property
    def vehicle_ids(self) -> frozenset[str]:
        return frozenset(self.ids)

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, MobilityTrace):
            return NotImplemented
        return (self.ids == other.ids
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.vehicle_index, other.vehicle_index)
                and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))

    def rows(self) -> Iterable[tuple[float, str, float, float]]:
        for t, v, x, y in zip(self.times, self.vehicle_index, self.x, self.y):
            yield float(t), self.ids[v], float(x), float(y)

    def num_windows(self, cfg: GridConfig) -> int:
        """Number of whole windows whose start lies inside the trace."""
        return int(math.floor(self.duration * 1000.0 / cfg.window_ms + 1e-9))


def _from_rows(rows: list[tuple[float, str, float, float]]) -> MobilityTrace:
    ids: dict[str, int] = {}
    # stable sort keeps per-vehicle file order for equal times
    rows = sorted(rows, key=lambda r: r[0])
    for r in rows:
        ids.setdefault(r[1], len(ids))
    return MobilityTrace(
        times=np.array([r[0] for r in rows], dtype=float),
        vehicle_index=np.array([ids[r[1]] for r in rows], dtype=np.int64),
        x=np.array([r[2] for r in rows], dtype=float),
        y=np.array([r[3] for r in rows], dtype=float),
        ids=tuple(ids),
    )


def load_trace(source: TextIO | str) -> MobilityTrace:
    """Parse trace CSV from a text stream (or a string holding the CSV text)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    rows = []
    last_time: dict[str, float] = {}
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise TraceFormatError(f"expected 4 fields, got {len(parts)}", lineno)
        t_s, vid, x_s, y_s = parts
        try:
            t, x, y = float(t_s), float(x_s), float(y_s)
        except ValueError as exc:
            raise TraceFormatError(f"bad number ({exc})", lineno) from None
        if not vid:
            raise TraceFormatError("empty vehicle id", lineno)
        if not all(math.isfinite(v) for v in (t, x, y)):
            raise TraceFormatError("non-finite value", lineno)
        if vid in last_time and t <= last_time[vid]:
            raise TraceFormatError(
                f"timestamps of vehicle {vid!r} not strictly increasing", lineno)
        last_time[vid] = t
        rows.append((t, vid, x, y))
    if not rows:
        raise TraceFormatError("trace is empty")
    return _from_rows(rows)


def load_trace_file(path: str | os.PathLike) -> MobilityTrace:
    with open(path, encoding="utf-8") as fh:
        return load_trace(fh)


def dump_trace(trace: MobilityTrace, out: TextIO) -> None:
    # repr() round-trips floats exactly
    for t, vid, x, y in trace.rows():
        out.write(f"{t!r},{vid},{x!r},{y!r}\n")


def dumps_trace(trace: MobilityTrace) -> str:
    buf = io.StringIO()
    dump_trace(trace, buf)
    return buf.getvalue()


def load_sumo_fcd(source) -> MobilityTrace:
    """Read a SUMO floating-car-data XML export (``--fcd-output``).

    ``source`` is a path or a binary/text file object.
    """
    rows = []
    t = None
    for event, elem in ET.iterparse(source, events=("start", "end")):
        if event == "start" and elem.tag == "timestep":
            t = float(elem.get("time"))
        elif event == "end" and elem.tag in ("vehicle", "person", "container"):
            if t is None:
                raise TraceFormatError("vehicle element outside a timestep")
            rows.append((t, elem.get("id"), float(elem.get("x")), float(elem.get("y"))))
        elif event == "end" and elem.tag == "timestep":
            elem.clear()
    if not rows:
        raise TraceFormatError("no vehicle samples in FCD file")
    return _from_rows(rows)


@dataclass(frozen=True)
class FleetSnapshot:
    window: WindowIndex
    time_s: float
    ids: tuple[str, ...]
    positions: np.ndarray  # (n, 2), rows follow ``ids``

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {v: (float(p[0]), float(p[1])) for v, p in zip(self.ids, self.positions)}

    def __len__(self):
        return len(self.ids)


def positions_at(trace: MobilityTrace, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Interpolated positions of the vehicles alive at time ``t``.

    Returns (vehicle indices into ``trace.ids``, positions).  Exact at sample
    instants.
    """
    ts, xs, ys, starts, counts = trace._by_vehicle
    first = ts[starts]
    last = ts[starts + counts - 1]
    alive = np.flatnonzero((first <= t) & (t <= last))
    lo = starts[alive].copy()
    hi = (starts + counts)[alive].copy()
    # vectorized bisection for the last sample <= t inside each vehicle's block
    while True:
        active = hi - lo > 1
        if not active.any():
            break
        mid = (lo + hi) // 2
        go_right = active & (ts[np.minimum(mid, len(ts) - 1)] <= t)
        go_left = active & ~go_right
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_left, mid, hi)
    nxt = np.minimum(lo + 1, (starts + counts)[alive] - 1)
    t0, t1 = ts[lo], ts[nxt]
    span = t1 - t0
    frac = np.divide(t - t0, span, out=np.zeros_like(t0), where=span > 0)
    at_sample = t0 == t
    px = np.where(at_sample, xs[lo], xs[lo] + frac * (xs[nxt] - xs[lo]))
    py = np.where(at_sample, ys[lo], ys[lo] + frac * (ys[nxt] - ys[lo]))
    return alive, np.column_stack([px, py])


def snapshot_at(trace: MobilityTrace, window: int, cfg: GridConfig) -> FleetSnapshot:
    window = WindowIndex(window)
    t = trace.start_time + window.start_ms(cfg) / 1000.0
    if t > trace.end_time + 1e-9:
        raise ValueError(
            f"window {int(window)} starts at {t:g} s, after trace end {trace.end_time:g} s")
    t = min(t, trace.end_time)
    idx, pos = positions_at(trace, t)
    return FleetSnapshot(window, t, tuple(trace.ids[i] for i in idx), pos)


@dataclass(frozen=True)
class SyntheticParams:
    """Straight two-way highway along x; vehicles keep their speed and lane.

    A vehicle leaving one end re-enters at the other end under a new id
    (``v<i>.<pass>``), which keeps the density constant.
    """

    num_vehicles: int = 300
    road_length_m: float = 2000.0
    lanes_per_direction: int = 2
    lane_width_m: float = 4.0
    speed_min_mps: float = 10.0
    speed_max_mps: float = 20.0
    duration_s: float = 60.0


def generate_synthetic(params: SyntheticParams, rng: np.random.Generator) -> MobilityTrace:
    p = params
    if p.num_vehicles < 1:
        raise ValueError("num_vehicles must be >= 1")
    if p.duration_s <= 0:
        raise ValueError("duration must be positive")
    if not p.road_length_m > 0 or p.lanes_per_direction < 1:
        raise ValueError("degenerate road geometry (zero extent)")
    if p.speed_min_mps < 0 or p.speed_max_mps < p.speed_min_mps:
        raise ValueError("invalid speed range")
    L = float(p.road_length_m)
    n = p.num_vehicles
    n_lanes = 2 * p.lanes_per_direction
    lane = rng.integers(0, n_lanes, size=n)
    s0 = rng.uniform(0.0, L, size=n)
    speed = rng.uniform(p.speed_min_mps, p.speed_max_mps, size=n)
    forward = lane < p.lanes_per_direction
    y_lane = (lane + 0.5) * p.lane_width_m

    def vid(i, k):
        return f"v{i}" if k == 0 else f"v{i}.{k}"

    def x_at(i, along):
        return along if forward[i] else L - along

    times = np.arange(0.0, math.floor(p.duration_s + 1e-9) + 1.0)
    rows = []
    for t in times:
        s = s0 + speed * t
        passes = np.floor(s / L).astype(np.int64)
        along = s - passes * L
        for i in range(n):
            rows.append((float(t), vid(i, passes[i]), float(x_at(i, along[i])), float(y_lane[i])))
    # at each wrap the old id leaves and the new id enters at the same instant,
    # so the road never loses a vehicle between 1 Hz samples
    t_end = float(times[-1])
    for i in range(n):
        if speed[i] <= 0:
            continue
        last_pass = int(math.floor((s0[i] + speed[i] * t_end) / L))
        for k in range(1, last_pass + 1):
            t_c = float((k * L - s0[i]) / speed[i])
            rows.append((t_c, vid(i, k - 1), float(x_at(i, L)), float(y_lane[i])))
            if t_c not in times:  # otherwise the regular sample starts the new pass
                rows.append((t_c, vid(i, k), float(x_at(i, 0.0)), float(y_lane[i])))
    return _from_rows(rows)
