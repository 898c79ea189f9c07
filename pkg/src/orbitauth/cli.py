"""Command-line entry point: ``orbitauth {propagate,ccm,run,preset}``.

Exit status is 0 on success, 2 for configuration errors and 1 for any other
failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .ccm import ConfigurationError, build_ccm
from .experiment import (
    DEFAULT_N_VALUES,
    PRESETS,
    ConfigError,
    config_from_dict,
    load_config,
    run_config,
    run_scenario_preset,
    write_csv,
)
from .orbital_mechanics import eci_to_ecef, propagate, topocentric

log = logging.getLogger("orbitauth")


def _n_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("N values must be positive integers")
    return values


def _config(args):
    return load_config(args.config) if args.config else config_from_dict({})


def cmd_propagate(args) -> int:
    cfg = _config(args)
    start = cfg.window.start if args.start is None else args.start
    end = cfg.window.end if args.end is None else args.end
    if not end > start or not args.step > 0:
        raise ConfigError("--start/--end/--step", "need end > start and a positive step")
    times = start + args.step * np.arange(int(math.floor((end - start) / args.step)) + 1)
    eci = propagate(cfg.alice, times)
    ecef = eci_to_ecef(eci)
    obs = topocentric(ecef, cfg.station)
    header = (
        "time_s", "eci_x_m", "eci_y_m", "eci_z_m", "eci_vx_mps", "eci_vy_mps", "eci_vz_mps",
        "ecef_x_m", "ecef_y_m", "ecef_z_m", "range_m", "range_rate_mps", "elevation_deg", "azimuth_deg",
    )
    rows = np.column_stack([
        times, eci.position, eci.velocity, ecef.position, obs.slant_range, obs.range_rate,
        np.degrees(obs.elevation), np.degrees(obs.azimuth),
    ])
    out = Path(args.out) if args.out else Path("/dev/stdout")
    write_csv(out, header, rows)
    return 0


def cmd_ccm(args) -> int:
    cfg = _config(args)
    ccm = build_ccm(cfg.alice, cfg.station, cfg.window, cfg.slot_duration, cfg.link)
    out = Path(args.out or "ccm.json")
    if out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "ccm.json"
    ccm.save(out)
    log.info("wrote %d-slot CCM to %s", len(ccm), out)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    manifest = run_config(cfg, args.n, args.trials, args.seed, args.out, args.workers, label="run")
    log.info("wrote %d files to %s", len(manifest.outputs), args.out)
    return 0


def cmd_preset(args) -> int:
    manifest = run_scenario_preset(
        args.name, args.altitude_km * 1e3, args.n, args.trials, args.seed, args.out, args.workers
    )
    log.info("wrote %d files to %s", len(manifest.outputs), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitauth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mc=True):
        p.add_argument("--config", help="scenario JSON (defaults apply when omitted)")
        p.add_argument("--out", help="output file or directory")
        if mc:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--trials", type=int, default=10_000)
            p.add_argument("--n", type=_n_list, default=list(DEFAULT_N_VALUES),
                           help="comma-separated numbers of challenged timestamps")
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("propagate", help="Alice's state and look angles over time, as CSV")
    common(p, mc=False)
    p.add_argument("--start", type=float, help="s since J2000 (default: window start)")
    p.add_argument("--end", type=float, help="s since J2000 (default: window end)")
    p.add_argument("--step", type=float, default=1.0)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("ccm", help="build the channel characteristic map and export it as JSON")
    common(p, mc=False)
    p.set_defaults(func=cmd_ccm)

    p = sub.add_parser("run", help="Monte Carlo DEP versus N for a config")
    common(p)
    p.set_defaults(func=cmd_run, out="out")

    p = sub.add_parser("preset", help="run one of the case-study scenarios")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--altitude-km", type=float, default=1200.0, help="adversary altitude")
    common(p)
    p.set_defaults(func=cmd_preset, out="out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
