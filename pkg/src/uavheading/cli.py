"""Command-line front end: ``uavsim simulate | twouser | sweep``.

Every command writes plot-ready CSV (9 significant digits) plus a
``manifest.json`` holding the config echo, version, seed and outputs.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    load_sim_config,
    parse_overrides,
    read_yaml,
    sim_config_to_dict,
    twouser_settings,
)
from .kernels import BACKEND
from .simengine import run, snr_sweep
from .twouser import RectangleScenario, exhaustive_search, optimal_orientation, orientation_objective, trajectory_rate

log = logging.getLogger("uavsim")

EXIT_CONFIG = 2
EXIT_IO = 1


def fmt(x) -> str:
    return "%.9g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, command: str, config: dict, seed, outputs, started: float) -> None:
    _write_json(out / "manifest.json", {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "seed": seed,
        "config": config,
        "outputs": sorted(outputs),
        "duration_s": round(time.perf_counter() - started, 3),
    })


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = load_sim_config(args.config, parse_overrides(args.override))
    out = _out_dir(args.out)
    res = run(cfg)
    n = cfg.n_users

    header = ["step", "uav_x", "uav_y", "heading"]
    for i in range(1, n + 1):
        header += [f"x_{i}", f"y_{i}"]
    rows = []
    for r in res.records:
        rows.append([r.step, r.uav.x, r.uav.y, r.uav.heading, *r.true_positions.ravel().tolist()])
    _write_csv(out / "trajectory.csv", header, rows)

    header = ["step", *[f"rate_{i}" for i in range(1, n + 1)], "sum_rate", "stderr"]
    rows = [[r.step, *r.rates.tolist(), r.sum_rate, r.sum_stderr] for r in res.records]
    _write_csv(out / "rates.csv", header, rows)

    _write_json(out / "summary.json", {
        "strategy": cfg.strategy,
        "seed": cfg.seed,
        "avg_rates": res.avg_rates.tolist(),
        "avg_sum_rate": res.avg_sum_rate,
        "avg_sum_stderr": res.avg_sum_stderr,
        "avg_interference_free_sum": res.avg_interference_free_sum,
        "cog_guard_fired": int(sum(r.decision.cog_guard_fired for r in res.records)),
    })
    outputs = ["trajectory.csv", "rates.csv", "summary.json"]
    _manifest(out, "simulate", sim_config_to_dict(cfg), cfg.seed, outputs, started)
    print(f"avg sum rate {res.avg_sum_rate:.4f} bits/s/Hz ({cfg.strategy}, seed {cfg.seed})")
    return 0


def cmd_twouser(args) -> int:
    started = time.perf_counter()
    s = twouser_settings(read_yaml(args.config), parse_overrides(args.override))
    scenario = RectangleScenario(s["d"], s["h_u"], s["c_min"], s["c_max"], s["m_antennas"],
                                 10.0 ** (s["snr_db"] / 10.0), s["path_loss_exp"])
    out = _out_dir(args.out)
    summary = {"mode": args.mode}
    deltas = np.arange(0.0, math.pi / 2 + 1e-12, s["delta_step"])
    exhaustive_col = [""] * len(deltas)

    if args.mode in ("line_search", "both"):
        opt = optimal_orientation(scenario)
        if opt.constant:
            log.warning("orientation objective is constant (M=%d); any delta is optimal", scenario.m_antennas)
        summary["line_search"] = {
            "delta": opt.delta, "c_a": opt.c_a, "c_b": opt.c_b, "objective": opt.objective,
            "constant_objective": opt.constant,
            "avg_rate": trajectory_rate(opt.delta, opt.c_a, opt.c_b, scenario, s["n_points"]),
        }
    if args.mode in ("exhaustive", "both"):
        ex = exhaustive_search(scenario, s["delta_step"], s["side_step"], s["n_points"])
        summary["exhaustive"] = {"delta": ex.delta, "c_a": ex.c_a, "c_b": ex.c_b, "avg_rate": ex.sum_rate}
        exhaustive_col = ex.best_rate_per_delta.tolist()
    if args.mode == "both":
        summary["rate_ratio"] = summary["line_search"]["avg_rate"] / summary["exhaustive"]["avg_rate"]

    objective = orientation_objective(deltas, scenario)
    rows = [[d, o, e] for d, o, e in zip(deltas.tolist(), objective.tolist(), exhaustive_col)]
    _write_csv(out / "orientation.csv", ["delta", "objective", "exhaustive_best_rate"], rows)
    _write_json(out / "summary.json", summary)
    _manifest(out, "twouser", s, None, ["orientation.csv", "summary.json"], started)
    for key in ("line_search", "exhaustive"):
        if key in summary:
            r = summary[key]
            print(f"{key}: delta={r['delta']:.4f} C_a={r['c_a']:g} C_b={r['c_b']:g}")
    return 0


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    cfg = load_sim_config(args.config, parse_overrides(args.override))
    snrs = _float_list(args.snr_list)
    strategies = [t.strip() for t in args.strategies.split(",") if t.strip()]
    out = _out_dir(args.out)
    rows = snr_sweep(cfg, snrs, strategies)
    _write_csv(out / "sweep.csv", ["snr_db_at_1km", "strategy", "avg_sum_rate", "stderr"],
               [[r.snr_db_at_1km, r.strategy, r.avg_sum_rate, r.stderr] for r in rows])
    echo = sim_config_to_dict(cfg)
    echo.update(snr_list=snrs, strategies=strategies)
    _manifest(out, "sweep", echo, cfg.seed, ["sweep.csv"], started)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavsim", description="UAV heading control for multi-user uplinks")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="YAML config file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")

    sp = sub.add_parser("simulate", help="run the closed-loop mobile scenario")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("twouser", help="rectangular trajectory orientation for two static users")
    common(sp)
    sp.add_argument("--mode", choices=("line_search", "exhaustive", "both"), default="line_search")
    sp.set_defaults(func=cmd_twouser)

    sp = sub.add_parser("sweep", help="average sum rate versus 1-km reference SNR")
    common(sp)
    sp.add_argument("--snr-list", required=True, help="comma-separated SNRs in dB")
    sp.add_argument("--strategies", required=True, help="comma-separated strategy names")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
