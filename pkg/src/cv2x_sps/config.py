"""Run configuration: TOML parsing with strict keys, validation and round-trip.

Every section mirrors one module's config object.  Only
``scheduler.selectivity_k`` is required; everything else defaults to the
reference parameter set (F=1, 100 subchannels, 23 dBm, 7 dB shadowing...).
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import sys
from dataclasses import dataclass, field, replace

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import B1Params, ChannelConfig
from .metrics import DEFAULT_BINS
from .reception import DecodeThresholds
from .resource import GridConfig
from .sps import SchedulerConfig
from .trace import SyntheticParams


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class MetricsConfig:
    bins: tuple[float, ...] = DEFAULT_BINS
    cumulative: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(float(b) for b in self.bins))
        if not self.bins or any(b <= 0 for b in self.bins):
            raise ValueError("bins must be non-empty and positive")
        if any(b2 <= b1 for b1, b2 in zip(self.bins, self.bins[1:])):
            raise ValueError("bins must be strictly ascending")


@dataclass(frozen=True)
class TraceConfig:
    file: str = ""
    synthetic: SyntheticParams = field(default_factory=SyntheticParams)


@dataclass(frozen=True)
class SweepConfig:
    k: tuple[int, ...] = ()
    f: tuple[int, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    scheduler: SchedulerConfig
    grid: GridConfig = field(default_factory=GridConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    decode: DecodeThresholds = field(default_factory=DecodeThresholds)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 1
    warmup_windows: int | None = None
    max_windows: int | None = None
    output_dir: str = "results"

    @property
    def thresholds(self) -> DecodeThresholds:
        return replace(self.decode, sensitivity_dbm=self.channel.sensitivity_dbm)

    def with_setting(self, k: int | None = None, f: int | None = None) -> "RunConfig":
        cfg = self
        if k is not None:
            cfg = replace(cfg, scheduler=replace(cfg.scheduler, selectivity_k=int(k)))
        if f is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, num_sub_bands=int(f)))
        return cfg

    def sweep_settings(self) -> list[tuple[int, int]]:
        ks = self.sweep.k or (self.scheduler.selectivity_k,)
        fs = self.sweep.f or (self.grid.num_sub_bands,)
        return [(k, f) for f in fs for k in ks]

    def digest(self) -> str:
        """Hash of everything that influences results (not the output path)."""
        text = dumps_config(replace(self, output_dir=""))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# section -> (attribute path on RunConfig, {key: type})
_INT, _FLOAT, _STR, _BOOL = "int", "float", "str", "bool"
_FLOATS, _INTS = "float list", "int list"

_SECTIONS: dict[str, tuple[tuple[str, ...], type, dict[str, str]]] = {
    "grid": (("grid",), GridConfig, {
        "num_sub_bands": _INT, "subchannels_per_band": _INT,
        "window_ms": _INT, "cam_rate_hz": _FLOAT}),
    "channel": (("channel",), ChannelConfig, {
        "tx_power_dbm": _FLOAT, "antenna_gain_db": _FLOAT, "shadow_sigma_db": _FLOAT,
        "shadow_corr_dist_m": _FLOAT, "carrier_freq_ghz": _FLOAT, "ibe_vector": _FLOATS,
        "noise_power_dbm": _FLOAT, "sensitivity_dbm": _FLOAT, "band_slots": _INTS}),
    "channel.b1": (("channel", "b1"), B1Params, {
        f.name: _FLOAT for f in dataclasses.fields(B1Params)}),
    "scheduler": (("scheduler",), SchedulerConfig, {
        "selectivity_k": _INT, "sps_duration_choices_s": _FLOATS, "aux_redraw": _STR}),
    "reception": (("decode",), DecodeThresholds, {"rho_bps_hz": _FLOAT, "lambda": _FLOAT}),
    "metrics": (("metrics",), MetricsConfig, {"bins": _FLOATS, "cumulative": _BOOL}),
    "trace": (("trace",), TraceConfig, {"file": _STR}),
    "trace.synthetic": (("trace", "synthetic"), SyntheticParams, {
        "num_vehicles": _INT, "road_length_m": _FLOAT, "lanes_per_direction": _INT,
        "lane_width_m": _FLOAT, "speed_min_mps": _FLOAT, "speed_max_mps": _FLOAT,
        "duration_s": _FLOAT}),
    "sweep": (("sweep",), SweepConfig, {"k": _INTS, "f": _INTS}),
    "run": ((), RunConfig, {
        "seed": _INT, "warmup_windows": _INT, "max_windows": _INT, "output_dir": _STR}),
}
# TOML key -> dataclass attribute where they differ
_RENAMES = {("reception", "lambda"): "lam"}


def _coerce(key: str, kind: str, value):
    def num(v, want_int):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(key, f"expected {'integer' if want_int else 'number'}, "
                                   f"got {type(v).__name__}")
        if want_int and not isinstance(v, int):
            raise ConfigError(key, f"expected integer, got {v!r}")
        return int(v) if want_int else float(v)

    if kind in (_INT, _FLOAT):
        return num(value, kind == _INT)
    if kind in (_INTS, _FLOATS):
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {type(value).__name__}")
        return tuple(num(v, kind == _INTS) for v in value)
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected string, got {type(value).__name__}")
        return value
    if not isinstance(value, bool):
        raise ConfigError(key, f"expected boolean, got {type(value).__name__}")
    return value


def _section_values(data: dict, name: str) -> dict:
    node = data
    for part in name.split("."):
        node = node.get(part, {}) if isinstance(node, dict) else {}
    if not isinstance(node, dict):
        raise ConfigError(name, "expected a table")
    return node


def _check_unknown(data: dict, prefix: str = "") -> None:
    for key, value in data.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            if path not in _SECTIONS:
                raise ConfigError(path, "unknown section")
            _check_unknown(value, path + ".")
        else:
            section = prefix[:-1]
            if section not in _SECTIONS or key not in _SECTIONS[section][2]:
                raise ConfigError(path, "unknown key")


def config_from_dict(data: dict) -> RunConfig:
    _check_unknown(data)
    kwargs: dict[str, dict] = {}
    for name, (_, _, keys) in _SECTIONS.items():
        raw = _section_values(data, name)
        kwargs[name] = {
            _RENAMES.get((name, k), k): _coerce(f"{name}.{k}", keys[k], v)
            for k, v in raw.items() if not isinstance(v, dict)
        }

    if "selectivity_k" not in kwargs["scheduler"]:
        raise ConfigError("scheduler.selectivity_k", "missing required field")

    def build(name, cls, **extra):
        try:
            return cls(**kwargs[name], **extra)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            # point at the offending field when the message names one
            named = [k for k in _SECTIONS[name][2] if k in str(exc)]
            key = f"{name}.{max(named, key=len)}" if named else name
            raise ConfigError(key, str(exc)) from None

    b1 = build("channel.b1", B1Params)
    cfg = RunConfig(
        scheduler=build("scheduler", SchedulerConfig),
        grid=build("grid", GridConfig),
        channel=build("channel", ChannelConfig, b1=b1),
        decode=build("reception", DecodeThresholds),
        metrics=build("metrics", MetricsConfig),
        trace=build("trace", TraceConfig, synthetic=build("trace.synthetic", SyntheticParams)),
        sweep=build("sweep", SweepConfig),
        **kwargs["run"],
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Cross-section checks for the base setting and every sweep setting."""
    if cfg.warmup_windows is not None and cfg.warmup_windows < 0:
        raise ConfigError("run.warmup_windows", "must be >= 0")
    if cfg.max_windows is not None and cfg.max_windows < 2:
        raise ConfigError("run.max_windows", "must be >= 2")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("run.seed", "must be an unsigned 64-bit integer")
    settings = [(cfg.scheduler.selectivity_k, cfg.grid.num_sub_bands)] + cfg.sweep_settings()
    for k, f in settings:
        key_k = "sweep.k" if k != cfg.scheduler.selectivity_k else "scheduler.selectivity_k"
        key_f = "sweep.f" if f != cfg.grid.num_sub_bands else "grid.num_sub_bands"
        if not 1 <= k <= cfg.grid.S:
            raise ConfigError(key_k, f"K={k} must lie in 1..{cfg.grid.S}")
        if f < 1:
            raise ConfigError(key_f, "F must be >= 1")
        try:
            cfg.channel.validate_bands(f)
        except ValueError as exc:
            raise ConfigError(key_f, str(exc)) from None
    try:
        cfg.scheduler.validate(cfg.grid)
    except ValueError as exc:
        raise ConfigError("scheduler.sps_duration_choices_s", str(exc)) from None


def loads_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML ({exc})") from None
    return config_from_dict(data)


def load_config(path: str | os.PathLike) -> RunConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    cfg = loads_config(text)
    # trace files are relative to the config file
    if cfg.trace.file and not os.path.isabs(cfg.trace.file):
        base = os.path.dirname(os.path.abspath(path))
        cfg = replace(cfg, trace=replace(cfg.trace, file=os.path.join(base, cfg.trace.file)))
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    out: dict = {}
    for name, (path, _, keys) in _SECTIONS.items():
        obj = cfg
        for attr in path:
            obj = getattr(obj, attr)
        table = {}
        for key in keys:
            value = getattr(obj, _RENAMES.get((name, key), key))
            if value is None:
                continue
            table[key] = list(value) if isinstance(value, tuple) else value
        node = out
        parts = name.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node.setdefault(parts[-1], {}).update(table)
    return out


def dumps_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))
