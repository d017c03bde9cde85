"""Distance-binned PRR counters, loss-cause attribution and power CDFs.

A *raw* attempt is one copy (primary or replica) reaching one receiver.  A
*service* message is the group of F copies of one CAM instance at one
receiver; it succeeds if any copy decodes.  When every copy fails the message
is charged to a single cause: interference if any copy failed by SINR, else
propagation if any copy was below sensitivity, else half-duplex.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .reception import Outcome, ReceptionBatch, ReceptionRecord

LOSS_CAUSES = ("cci", "prop", "hd")
DEFAULT_BINS = (50.0, 100.0, 150.0, 200.0, 250.0, 300.0)


def _cause_codes(outcomes: np.ndarray) -> np.ndarray:
    """Per service message: -1 decoded, else index into LOSS_CAUSES."""
    dec = (outcomes == Outcome.DECODED).any(axis=1)
    interf = (outcomes == Outcome.LOST_INTERFERENCE).any(axis=1)
    prop = (outcomes == Outcome.LOST_PROPAGATION).any(axis=1)
    cause = np.where(interf, 0, np.where(prop, 1, 2))
    return np.where(dec, -1, cause)


@dataclass
class PrrAccumulator:
    bins: tuple[float, ...] = DEFAULT_BINS
    cumulative: bool = True
    raw_attempts: np.ndarray = field(default=None)
    raw_successes: np.ndarray = field(default=None)
    raw_losses: np.ndarray = field(default=None)      # (B, 4) indexed by Outcome
    service_messages: np.ndarray = field(default=None)
    service_successes: np.ndarray = field(default=None)
    service_losses: np.ndarray = field(default=None)  # (B, 3) indexed like LOSS_CAUSES

    def __post_init__(self):
        self.bins = tuple(float(b) for b in self.bins)
        if not self.bins or any(b2 <= b1 for b1, b2 in zip(self.bins, self.bins[1:])):
            raise ValueError("bins must be non-empty and strictly ascending")
        B = len(self.bins)
        for name, shape in (("raw_attempts", B), ("raw_successes", B), ("raw_losses", (B, 4)),
                            ("service_messages", B), ("service_successes", B),
                            ("service_losses", (B, 3))):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(shape, dtype=np.int64))

    def _add(self, distance: np.ndarray, outcomes: np.ndarray) -> None:
        B = len(self.bins)
        n_out = len(Outcome)
        # bin index = first D_x >= distance; beyond the last bin is dropped
        idx = np.searchsorted(np.asarray(self.bins), distance, side="left")
        keep = idx < B
        idx, outcomes = idx[keep], np.asarray(outcomes[keep], dtype=np.int64)

        raw = np.bincount((idx[:, None] * n_out + outcomes).ravel(),
                          minlength=B * n_out).reshape(B, n_out)
        cause = _cause_codes(outcomes) + 1  # 0 decoded, 1.. causes
        n_cls = len(LOSS_CAUSES) + 1
        svc = np.bincount(idx * n_cls + cause, minlength=B * n_cls).reshape(B, n_cls)

        parts = [raw.sum(axis=1), raw[:, Outcome.DECODED], raw,
                 svc.sum(axis=1), svc[:, 0], svc[:, 1:]]
        if self.cumulative:
            parts = [np.cumsum(p, axis=0) for p in parts]
        self.raw_attempts += parts[0]
        self.raw_successes += parts[1]
        self.raw_losses += parts[2]
        self.service_messages += parts[3]
        self.service_successes += parts[4]
        self.service_losses += parts[5]

    def add_batch(self, batch: ReceptionBatch) -> "PrrAccumulator":
        self._add(np.asarray(batch.distance_m), np.asarray(batch.outcome))
        return self

    def add_records(self, records: Iterable[ReceptionRecord]) -> "PrrAccumulator":
        groups: dict[tuple, list[ReceptionRecord]] = defaultdict(list)
        for r in records:
            groups[(r.tx, r.rx, int(r.window))].append(r)
        if not groups:
            return self
        widths = {len(g) for g in groups.values()}
        for width in sorted(widths):
            sel = [g for g in groups.values() if len(g) == width]
            dist = np.array([g[0].distance_m for g in sel])
            outs = np.array([[int(r.outcome) for r in g] for g in sel], dtype=np.int8)
            self._add(dist, outs)
        return self

    def merge(self, other: "PrrAccumulator") -> "PrrAccumulator":
        if self.bins != other.bins or self.cumulative != other.cumulative:
            raise ValueError("cannot merge accumulators with different binning")
        return PrrAccumulator(
            self.bins, self.cumulative,
            self.raw_attempts + other.raw_attempts,
            self.raw_successes + other.raw_successes,
            self.raw_losses + other.raw_losses,
            self.service_messages + other.service_messages,
            self.service_successes + other.service_successes,
            self.service_losses + other.service_losses,
        )

    def __eq__(self, other):
        if not isinstance(other, PrrAccumulator):
            return NotImplemented
        return (self.bins == other.bins and self.cumulative == other.cumulative
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ("raw_attempts", "raw_successes", "raw_losses",
                                  "service_messages", "service_successes",
                                  "service_losses")))


def accumulate(acc: PrrAccumulator, records) -> PrrAccumulator:
    """Add a :class:`ReceptionBatch` or an iterable of records to ``acc``."""
    if isinstance(records, ReceptionBatch):
        return acc.add_batch(records)
    return acc.add_records(records)


def _ratio(num, den):
    return None if den == 0 else float(num) / float(den)


def prr_values(acc: PrrAccumulator) -> list[dict]:
    """Per bin ``{d_x, prr_raw, prr_service}``; empty bins give ``None``."""
    return [
        {"d_x": d,
         "prr_raw": _ratio(acc.raw_successes[b], acc.raw_attempts[b]),
         "prr_service": _ratio(acc.service_successes[b], acc.service_messages[b])}
        for b, d in enumerate(acc.bins)
    ]


def loss_breakdown(acc: PrrAccumulator) -> list[dict]:
    """Per bin fraction of service messages lost to each cause."""
    out = []
    for b, d in enumerate(acc.bins):
        n = acc.service_messages[b]
        row = {"d_x": d}
        for c, name in enumerate(LOSS_CAUSES):
            row[f"loss_{name}"] = _ratio(acc.service_losses[b, c], n)
        out.append(row)
    return out


@dataclass
class PowerCdfAccumulator:
    """Received power (mW) sensed on each newly selected primary subchannel."""

    samples: list = field(default_factory=list)

    def add(self, values) -> None:
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("power samples must be finite and non-negative")
        self.samples.extend(vals.tolist())

    def merge(self, other: "PowerCdfAccumulator") -> "PowerCdfAccumulator":
        return PowerCdfAccumulator(self.samples + other.samples)

    def array(self) -> np.ndarray:
        return np.sort(np.asarray(self.samples, dtype=float))

    def __len__(self):
        return len(self.samples)


def power_cdf(acc: PowerCdfAccumulator | Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF as (value, P[X <= value]) at each distinct sample."""
    x = acc.array() if isinstance(acc, PowerCdfAccumulator) else np.sort(np.asarray(acc, float))
    if x.size == 0:
        raise ValueError("power CDF needs at least one sample")
    values, counts = np.unique(x, return_counts=True)
    probs = np.cumsum(counts) / x.size
    return [(float(v), float(p)) for v, p in zip(values, probs)]


def ecdf_at(samples, points) -> np.ndarray:
    x = np.sort(np.asarray(samples, dtype=float))
    return np.searchsorted(x, np.asarray(points, dtype=float), side="right") / x.size
