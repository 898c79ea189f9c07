"""Scenario configuration, case-study presets, batch runs and CSV/JSON output.

Config files are JSON with angles in degrees; everything in memory is SI with
angles in radians.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .adversary import AdversaryConfig, AdversaryState, Knowledge, Placement, physical_table, place_adversary
from .auth_protocol import DepResult, FeatureSet, PolicyKind, SamplingPolicy, Scenario, dep_versus_n
from .ccm import Ccm, VisibilityWindow, build_ccm, slot_grid, visibility_window
from .observables import FEATURES, LinkParams, NoiseModel
from .orbital_mechanics import R_EARTH, GroundStation, KeplerianElements, gmst, orbital_period

DEFAULT_ALICE_ALTITUDE = 600e3
DEFAULT_INCLINATION_DEG = 53.0
DEFAULT_STATION_DEG = (35.0, 129.0)
# sub-satellite point at the epoch sits this far east of the station, so the
# pass culminates a few degrees short of zenith
DEFAULT_PASS_OFFSET_DEG = 0.5
# default alignment instant, as a fraction of the way through the pass
DEFAULT_ALIGNMENT_FRACTION = 0.25
SEARCH_SPAN = 86_400.0

PRESETS = ("scenario-1", "scenario-2", "scenario-3")
DEFAULT_N_VALUES = (1, 2, 5, 10, 20, 50)

SCHEMA = json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


class ConfigError(ValueError):
    """Config problem tied to a field path and the constraint it breaks."""

    def __init__(self, field: str, constraint: str):
        self.field = field
        self.constraint = constraint
        super().__init__(f"{field}: {constraint}")


@dataclass(frozen=True)
class ScenarioConfig:
    alice: KeplerianElements
    station: GroundStation
    link: LinkParams
    noise: NoiseModel
    adversary: AdversaryConfig
    features: FeatureSet
    policy: SamplingPolicy
    slot_duration: float = 1.0
    mask_elevation: float = math.radians(10.0)

    @cached_property
    def window(self) -> VisibilityWindow:
        return first_pass(self.alice, self.station, self.mask_elevation)

    def materialize(self) -> Scenario:
        ccm = build_ccm(self.alice, self.station, self.window, self.slot_duration, self.link)
        trudy = place_adversary(self.alice, self.station, self.adversary)
        return Scenario(ccm, trudy, self.noise, self.features, self.policy)


@dataclass
class RunManifest:
    config_hash: str
    master_seed: int
    tool_version: str
    started: str
    finished: str = ""
    outputs: list[str] = field(default_factory=list)
    trials: int = 0
    n_values: list[int] = field(default_factory=list)
    label: str = ""

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2) + "\n")
        return path


def first_pass(alice: KeplerianElements, station: GroundStation, mask: float) -> VisibilityWindow:
    """First visibility window searched from half a period before the epoch."""
    start = alice.epoch - 0.5 * orbital_period(alice.a)
    windows = visibility_window(alice, station, start, start + SEARCH_SPAN, mask)
    if not windows:
        raise ConfigError("alice", "the satellite never rises above the mask within a day of the epoch")
    return windows[0]


def pass_over_station(
    station: GroundStation,
    altitude: float = DEFAULT_ALICE_ALTITUDE,
    inclination: float = math.radians(DEFAULT_INCLINATION_DEG),
    epoch: float = 0.0,
    east_offset: float = math.radians(DEFAULT_PASS_OFFSET_DEG),
) -> KeplerianElements:
    """Circular orbit whose sub-satellite point at ``epoch`` is just east of the station.

    Solves the node and true anomaly for an ascending pass.
    """
    s = math.sin(station.latitude) / math.sin(inclination) if inclination > 0 else math.inf
    if abs(s) > 1:
        raise ConfigError("alice.inclination_deg", "must be at least the station latitude to overfly it")
    u = math.asin(s)
    ra_target = station.longitude + east_offset + gmst(epoch)
    raan = ra_target - math.atan2(math.cos(inclination) * math.sin(u), math.cos(u))
    return KeplerianElements(R_EARTH + altitude, 0.0, inclination, raan, 0.0, u, epoch)


# -- config loading -----------------------------------------------------------

def _get(d: dict, key: str, default):
    value = d.get(key)
    return default if value is None else value


def config_from_dict(doc: dict) -> ScenarioConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(path, f"{err.validator} constraint violated ({err.message})")

    st = doc.get("station", {})
    lat_deg, lon_deg = DEFAULT_STATION_DEG
    station = GroundStation.from_degrees(
        _get(st, "latitude_deg", lat_deg), _get(st, "longitude_deg", lon_deg), _get(st, "altitude_m", 0.0)
    )

    lk = doc.get("link", {})
    link = LinkParams(_get(lk, "carrier_hz", 2.0e9), _get(lk, "tx_power_w", 1.0), _get(lk, "gain", 1.0))

    nz = doc.get("noise", {})
    sigma_el = _get(nz, "sigma_elevation_deg", 1.0)
    noise = NoiseModel(
        sigma_elevation=math.radians(sigma_el),
        sigma_azimuth=math.radians(_get(nz, "sigma_azimuth_deg", sigma_el)),
        sigma_doppler=_get(nz, "sigma_doppler_hz", 200.0),
        sigma_rtt=_get(nz, "sigma_rtt_s", 100e-9),
        sigma_rsp_db=_get(nz, "sigma_rsp_db", 1.0),
    )

    alice = _alice_from_dict(doc.get("alice", {}), station)
    mask = math.radians(_get(doc, "mask_elevation_deg", 10.0))
    slot_duration = float(_get(doc, "slot_duration_s", 1.0))

    try:
        window = first_pass(alice, station, mask)
        grid = slot_grid(window, slot_duration)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("slot_duration_s", str(exc)) from exc

    adv = doc.get("adversary", {})
    t1 = adv.get("alignment_time_s")
    if t1 is None:
        t1 = float(grid[int(round(DEFAULT_ALIGNMENT_FRACTION * (len(grid) - 1)))])
    elif not window.contains(t1):
        raise ConfigError(
            "adversary.alignment_time_s",
            f"must lie inside the visibility window [{window.start:.3f}, {window.end:.3f}] s",
        )
    else:
        # challenges are slot-aligned, so the alignment instant is too
        t1 = float(grid[int(round((t1 - grid[0]) / slot_duration))])
    knowledge = _get(adv, "knowledge", Knowledge.BLIND.value)
    precomp = _get(adv, "doppler_precompensation", False)
    if precomp and knowledge != Knowledge.INFORMED.value:
        raise ConfigError("adversary.doppler_precompensation", "requires knowledge = informed")
    adversary = AdversaryConfig(
        altitude=_get(adv, "altitude_m", 1200e3),
        knowledge=knowledge,
        placement=_get(adv, "placement", Placement.COPLANAR_OFFSET.value),
        doppler_precompensation=precomp,
        alignment_time=t1,
        along_track_offset=math.radians(_get(adv, "along_track_offset_deg", 0.0)),
    )

    ft = doc.get("features", {})
    flags = {f"use_{name}": _get(ft, name, name in ("doppler", "elevation")) for name in FEATURES}
    if not any(flags.values()):
        raise ConfigError("features", "at least one feature must be enabled")
    features = FeatureSet(**flags)
    sigma_field = {
        "doppler": "sigma_doppler_hz", "elevation": "sigma_elevation_deg", "azimuth": "sigma_azimuth_deg",
        "rsp": "sigma_rsp_db", "rtt": "sigma_rtt_s",
    }
    for name, on, sig in zip(FEATURES, features.mask(), noise.sigmas()):
        if on and not sig > 0:
            raise ConfigError(f"noise.{sigma_field[name]}", f"must be > 0 while feature '{name}' is enabled")

    pol = doc.get("policy", {})
    start_slot = pol.get("start_slot")
    if start_slot is None:
        start_slot = int(round((t1 - grid[0]) / slot_duration))
    elif start_slot >= len(grid):
        raise ConfigError("policy.start_slot", f"must be below the grid size {len(grid)}")
    policy = SamplingPolicy(_get(pol, "kind", PolicyKind.FIXED_CONSECUTIVE.value), start_slot)

    cfg = ScenarioConfig(alice, station, link, noise, adversary, features, policy, slot_duration, mask)
    # first_pass is deterministic; reuse the window instead of searching again
    cfg.__dict__["window"] = window
    return cfg


def _alice_from_dict(al: dict, station: GroundStation) -> KeplerianElements:
    if "semi_major_axis_m" in al:
        a = al["semi_major_axis_m"]
    else:
        a = R_EARTH + _get(al, "altitude_m", DEFAULT_ALICE_ALTITUDE)
    incl = math.radians(_get(al, "inclination_deg", DEFAULT_INCLINATION_DEG))
    epoch = float(_get(al, "epoch_s", 0.0))
    try:
        if "raan_deg" not in al:
            base = pass_over_station(station, a - R_EARTH, incl, epoch)
            raan, nu0 = base.raan, base.nu0
        else:
            raan, nu0 = math.radians(al["raan_deg"]), math.radians(al["true_anomaly_deg"])
        return KeplerianElements(
            a=a,
            e=_get(al, "eccentricity", 0.0),
            i=incl,
            raan=raan,
            argp=math.radians(_get(al, "argp_deg", 0.0)),
            nu0=nu0,
            epoch=epoch,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("alice", str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    el, st, adv = cfg.alice, cfg.station, cfg.adversary
    return {
        "alice": {
            "semi_major_axis_m": el.a,
            "eccentricity": el.e,
            "inclination_deg": math.degrees(el.i),
            "raan_deg": math.degrees(el.raan),
            "argp_deg": math.degrees(el.argp),
            "true_anomaly_deg": math.degrees(el.nu0),
            "epoch_s": el.epoch,
        },
        "station": {
            "latitude_deg": math.degrees(st.latitude),
            "longitude_deg": math.degrees(st.longitude),
            "altitude_m": st.altitude,
        },
        "link": {"carrier_hz": cfg.link.f_c, "tx_power_w": cfg.link.P_t, "gain": cfg.link.G},
        "noise": {
            "sigma_elevation_deg": math.degrees(cfg.noise.sigma_elevation),
            "sigma_azimuth_deg": math.degrees(cfg.noise.sigma_azimuth),
            "sigma_doppler_hz": cfg.noise.sigma_doppler,
            "sigma_rtt_s": cfg.noise.sigma_rtt,
            "sigma_rsp_db": cfg.noise.sigma_rsp_db,
        },
        "adversary": {
            "altitude_m": adv.altitude,
            "knowledge": adv.knowledge.value,
            "placement": adv.placement.value,
            "doppler_precompensation": adv.doppler_precompensation,
            "alignment_time_s": adv.alignment_time,
            "along_track_offset_deg": math.degrees(adv.along_track_offset),
        },
        "features": {name: bool(on) for name, on in zip(FEATURES, cfg.features.mask())},
        "policy": {"kind": cfg.policy.kind.value, "start_slot": cfg.policy.start_slot},
        "slot_duration_s": cfg.slot_duration,
        "mask_elevation_deg": math.degrees(cfg.mask_elevation),
    }


def config_hash(cfg: ScenarioConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def preset_dict(name: str, trudy_altitude: float = 1200e3) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if not trudy_altitude > 0:
        raise ConfigError("adversary.altitude_m", "must be positive")
    doc = {"alice": {"altitude_m": DEFAULT_ALICE_ALTITUDE}}
    if name == "scenario-1":
        doc["adversary"] = {"altitude_m": trudy_altitude, "knowledge": "blind", "placement": "coplanar"}
        doc["features"] = {"elevation": True, "doppler": True}
        doc["policy"] = {"kind": "fixed"}
    else:
        doc["adversary"] = {
            "altitude_m": trudy_altitude,
            "knowledge": "informed",
            "placement": "collinear",
            "doppler_precompensation": True,
        }
        doc["features"] = {"elevation": True, "doppler": False}
        doc["policy"] = {"kind": "fixed" if name == "scenario-2" else "random"}
    return doc


def preset_config(name: str, trudy_altitude: float = 1200e3) -> ScenarioConfig:
    return config_from_dict(preset_dict(name, trudy_altitude))


# -- outputs ------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


TRAJECTORY_COLUMNS = (
    "time_s", "alice_elevation_rad", "trudy_elevation_rad", "alice_doppler_hz",
    "trudy_doppler_hz", "alice_rtt_s", "trudy_rtt_s",
)


def emit_trajectory(ccm: Ccm, trudy: AdversaryState, out) -> Path:
    """Alice's reference and Trudy's physical trajectory over the CCM grid.

    Trudy's Doppler column is her kinematic Doppler, i.e. before any
    pre-compensation.
    """
    ref = ccm.table
    tr = physical_table(trudy, ccm)
    el, dop, rtt = FEATURES.index("elevation"), FEATURES.index("doppler"), FEATURES.index("rtt")
    rows = zip(ccm.slot_times, ref[:, el], tr[:, el], ref[:, dop], tr[:, dop], ref[:, rtt], tr[:, rtt])
    return write_csv(out, TRAJECTORY_COLUMNS, rows)


def write_dep(result: DepResult, out) -> Path:
    rows = ((result.n_challenges, t, fa, md) for t, fa, md in zip(result.thresholds, result.p_fa, result.p_md))
    return write_csv(out, ("n", "threshold", "p_fa", "p_md"), rows)


def write_summary(results: list[DepResult], out) -> Path:
    return write_csv(out, ("n", "min_dep"), ((r.n_challenges, r.min_dep) for r in results))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_config(
    cfg: ScenarioConfig,
    n_values,
    trials: int,
    seed: int,
    out_dir,
    workers: int = 1,
    label: str = "",
) -> RunManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_hash(cfg), int(seed), __version__, _now(), trials=int(trials),
                           n_values=[int(n) for n in n_values], label=label)
    scenario = cfg.materialize()
    outputs = [out_dir / "config.json"]
    outputs[0].write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
    outputs.append(emit_trajectory(scenario.ccm, scenario.adversary, out_dir / "trajectory.csv"))
    results = dep_versus_n(scenario, n_values, trials, seed, workers)
    for res in results:
        outputs.append(write_dep(res, out_dir / f"dep_{res.n_challenges}.csv"))
    outputs.append(write_summary(results, out_dir / "summary.csv"))
    manifest.outputs = [str(p) for p in outputs] + [str(out_dir / "manifest.json")]
    manifest.finished = _now()
    manifest.write(out_dir / "manifest.json")
    return manifest


def run_scenario_preset(
    name: str,
    trudy_altitude: float,
    n_values,
    trials: int,
    seed: int,
    out_dir,
    workers: int = 1,
) -> RunManifest:
    cfg = preset_config(name, trudy_altitude)
    return run_config(cfg, n_values, trials, seed, out_dir, workers, label=name)


def read_summary(path) -> dict[int, float]:
    with Path(path).open() as fh:
        return {int(row["n"]): float(row["min_dep"]) for row in csv.DictReader(fh)}
