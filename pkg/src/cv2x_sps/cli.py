"""Command-line front end.

    cv2x-sps validate  --config run.toml
    cv2x-sps run       --config run.toml [--seed N] [--out DIR] [--quiet]
    cv2x-sps sweep     --config run.toml [--seed N] [--out DIR] [--quiet]
    cv2x-sps gen-trace [--config run.toml] [--seed N] [--from-fcd FCD.xml] --out trace.csv
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import streams
from .config import ConfigError, RunConfig, load_config, loads_config
from .engine import SimulationResult, run
from .metrics import LOSS_CAUSES, power_cdf
from .reception import Outcome
from .trace import (MobilityTrace, dump_trace, generate_synthetic, load_sumo_fcd,
                    load_trace_file)

log = logging.getLogger("cv2x_sps")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def load_run_trace(cfg: RunConfig, seed: int) -> MobilityTrace:
    if cfg.trace.file:
        if cfg.trace.file.lower().endswith(".xml"):
            return load_sumo_fcd(cfg.trace.file)
        return load_trace_file(cfg.trace.file)
    return generate_synthetic(cfg.trace.synthetic, streams.stream(seed, streams.MOBILITY))


def write_run_reports(result: SimulationResult, out_dir: str) -> dict[str, str]:
    """Write prr/cdf/losses CSVs of one run; returns {kind: path}."""
    k = result.metadata["selectivity_k"]
    f = result.metadata["num_sub_bands"]
    acc = result.prr
    paths = {kind: os.path.join(out_dir, f"{kind}_{k}_{f}.csv")
             for kind in ("prr", "cdf", "losses")}

    rows = []
    for b, (prr, loss) in enumerate(zip(result.prr_values(), result.loss_breakdown())):
        rows.append([prr["d_x"], prr["prr_raw"], prr["prr_service"],
                     loss["loss_cci"], loss["loss_prop"], loss["loss_hd"],
                     int(acc.raw_attempts[b])])
    _write_csv(paths["prr"], ["d_x", "prr_raw", "prr_service", "loss_cci", "loss_prop",
                              "loss_hd", "attempts"], rows)

    rows = []
    for b, d in enumerate(acc.bins):
        rows.append([d, int(acc.service_messages[b]), int(acc.service_successes[b]),
                     *(int(v) for v in acc.service_losses[b]),
                     int(acc.raw_attempts[b]),
                     *(int(acc.raw_losses[b, o]) for o in Outcome)])
    _write_csv(paths["losses"],
               ["d_x", "service_messages", "service_decoded",
                *(f"service_lost_{c}" for c in LOSS_CAUSES), "raw_attempts",
                *(f"raw_{o.name.lower()}" for o in Outcome)], rows)

    cdf = power_cdf(result.power_cdf) if len(result.power_cdf) else []
    _write_csv(paths["cdf"], ["power_mw", "probability"], cdf)
    return paths


def _run_summary(result: SimulationResult) -> dict:
    return {"metadata": result.metadata, "prr": result.prr_values(),
            "losses": result.loss_breakdown()}


def _write_summary(path: str, cfg: RunConfig, seed: int, runs: list[dict]) -> None:
    summary = {"seed": seed, "config_digest": cfg.digest(), "runs": runs}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_sweep(cfg: RunConfig, trace: MobilityTrace | None = None, out_dir: str | None = None,
              seed: int | None = None) -> dict[tuple[int, int], SimulationResult | Exception]:
    """One run per (K, F) setting, all sharing the master seed.

    Writes per-run CSVs, ``comparison.csv`` (one prr_service / prr_raw column
    pair per series) and ``summary.json`` when ``out_dir`` is given.  A failing
    setting is recorded and the sweep continues.
    """
    seed = cfg.seed if seed is None else seed
    trace = load_run_trace(cfg, seed) if trace is None else trace
    results: dict[tuple[int, int], SimulationResult | Exception] = {}
    for k, f in cfg.sweep_settings():
        log.info("run K=%d F=%d", k, f)
        try:
            results[(k, f)] = run(cfg.with_setting(k, f), trace, seed)
        except Exception as exc:  # noqa: BLE001 - reported per run
            log.error("run K=%d F=%d failed: %s", k, f, exc)
            results[(k, f)] = exc
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        runs = []
        for (k, f), res in results.items():
            if isinstance(res, Exception):
                runs.append({"selectivity_k": k, "num_sub_bands": f, "error": str(res)})
            else:
                write_run_reports(res, out_dir)
                runs.append(_run_summary(res))
        ok = {key: r for key, r in results.items() if not isinstance(r, Exception)}
        header = ["d_x"]
        for k, f in ok:
            header += [f"K{k}_F{f}_prr_service", f"K{k}_F{f}_prr_raw"]
        rows = []
        for b, d in enumerate(cfg.metrics.bins):
            row = [d]
            for res in ok.values():
                vals = res.prr_values()[b]
                row += [vals["prr_service"], vals["prr_raw"]]
            rows.append(row)
        _write_csv(os.path.join(out_dir, "comparison.csv"), header, rows)
        _write_summary(os.path.join(out_dir, "summary.json"), cfg, seed, runs)
    return results


def _load(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = loads_config("[scheduler]\nselectivity_k = 30\n")
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None) is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"ok: {len(cfg.sweep_settings())} setting(s), digest {cfg.digest()}")
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    trace = load_run_trace(cfg, cfg.seed)
    result = run(cfg, trace, cfg.seed)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_run_reports(result, cfg.output_dir)
    _write_summary(os.path.join(cfg.output_dir, "summary.json"), cfg, cfg.seed,
                   [_run_summary(result)])
    if not args.quiet:
        for row in result.prr_values():
            print(f"D_x={row['d_x']:g} m  PRR_raw={_fmt(row['prr_raw'])}  "
                  f"PRR_service={_fmt(row['prr_service'])}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    results = run_sweep(cfg, out_dir=cfg.output_dir)
    failed = [key for key, r in results.items() if isinstance(r, Exception)]
    if not args.quiet:
        print(f"{len(results) - len(failed)} run(s) written to {cfg.output_dir}")
    return 1 if failed else 0


def cmd_gen_trace(args) -> int:
    if args.from_fcd:
        trace = load_sumo_fcd(args.from_fcd)
    else:
        cfg = _load(argparse.Namespace(config=args.config, seed=args.seed, out=None))
        trace = generate_synthetic(cfg.trace.synthetic,
                                   streams.stream(cfg.seed, streams.MOBILITY))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        dump_trace(trace, fh)
    if not args.quiet:
        print(f"{len(trace)} samples, {len(trace.ids)} vehicle ids -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cv2x-sps", description=__doc__.split("\n")[0] or None)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help="output directory"):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="master seed (overrides the file)")
        p.add_argument("--out", help=out_help)
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("validate", help="check a configuration file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    for name, func, text in (("run", cmd_run, "single run"), ("sweep", cmd_sweep, "K x F sweep")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.set_defaults(func=func)
    p = sub.add_parser("gen-trace", help="write a synthetic (or converted SUMO) trace CSV")
    common(p, "output CSV path")
    p.add_argument("--from-fcd", help="convert a SUMO FCD XML export instead")
    p.set_defaults(func=cmd_gen_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gen-trace" and not args.out:
        print("gen-trace: --out is required", file=sys.stderr)
        return 2
    level = logging.WARNING if getattr(args, "quiet", False) else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
