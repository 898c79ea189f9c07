"""Visibility windows and the channel characteristic map (CCM).

The CCM is the verifier's reference: the feature trajectory a legitimate
satellite must reproduce, sampled on a uniform slot grid across one pass.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .observables import FEATURES, FeatureVector, LinkParams, feature_table
from .orbital_mechanics import GroundStation, KeplerianElements, eci_to_ecef, look, propagate

SCAN_STEP = 1.0
REFINE_TOL = 0.01

ROW_KEYS = ("time_s", "doppler_hz", "elevation_rad", "azimuth_rad", "rsp_w", "rtt_s")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class VisibilityWindow:
    start: float
    end: float
    mask_elevation: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ConfigurationError("visibility window must have end > start")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def contains(self, t: float) -> bool:
        return self.start <= t <= self.end


def _elevation(elements, gs, t):
    return look(elements, gs, t).elevation


def _refine(elements, gs, mask, t_out, t_in):
    """Bisect the mask crossing between an outside and an inside time; return the inside end."""
    while abs(t_in - t_out) > REFINE_TOL:
        mid = 0.5 * (t_in + t_out)
        if _elevation(elements, gs, mid) >= mask:
            t_in = mid
        else:
            t_out = mid
    return t_in


def visibility_window(
    elements: KeplerianElements,
    gs: GroundStation,
    search_start: float,
    search_end: float,
    mask: float,
) -> list[VisibilityWindow]:
    """Maximal intervals in [search_start, search_end] with elevation >= mask."""
    if not search_end > search_start:
        raise ConfigurationError("search_end must exceed search_start")
    if not 0.0 <= mask < math.pi / 2:
        raise ConfigurationError("mask elevation must lie in [0, pi/2)")
    n = int(math.floor((search_end - search_start) / SCAN_STEP)) + 1
    times = search_start + SCAN_STEP * np.arange(n)
    if times[-1] < search_end:
        times = np.append(times, search_end)
    above = _elevation(elements, gs, times) >= mask
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    starts = [0] if above[0] else []
    ends = []
    for k in edges:
        if above[k + 1]:
            starts.append(k + 1)
        else:
            ends.append(k)
    if above[-1]:
        ends.append(len(times) - 1)

    windows = []
    for s, e in zip(starts, ends):
        t0 = float(times[s]) if s == 0 else _refine(elements, gs, mask, float(times[s - 1]), float(times[s]))
        t1 = float(times[e]) if e == len(times) - 1 else _refine(elements, gs, mask, float(times[e + 1]), float(times[e]))
        if t1 > t0:
            windows.append(VisibilityWindow(t0, t1, mask))
    return windows


@dataclass(frozen=True, eq=False)
class Ccm:
    slot_times: np.ndarray
    reference: tuple[FeatureVector, ...]
    slot_duration: float
    elements: KeplerianElements
    station: GroundStation
    link: LinkParams
    window: VisibilityWindow

    def __len__(self) -> int:
        return len(self.slot_times)

    @cached_property
    def table(self) -> np.ndarray:
        """Reference features as an ``(M, 5)`` array in ``FEATURES`` order."""
        out = np.array([fv.as_array() for fv in self.reference])
        out.setflags(write=False)
        return out

    def slot_of(self, t: float) -> int:
        """Nearest slot index to time ``t``."""
        k = int(round((t - self.slot_times[0]) / self.slot_duration))
        if not 0 <= k < len(self):
            raise IndexError(f"time {t} is outside the CCM grid")
        return k

    def to_json(self) -> dict:
        el, gs, w = self.elements, self.station, self.window
        return {
            "elements": {
                "a_m": el.a, "e": el.e, "i_rad": el.i, "raan_rad": el.raan,
                "argp_rad": el.argp, "nu0_rad": el.nu0, "epoch_s": el.epoch,
            },
            "station": {"latitude_rad": gs.latitude, "longitude_rad": gs.longitude, "altitude_m": gs.altitude},
            "link": {"carrier_hz": self.link.f_c, "tx_power_w": self.link.P_t, "gain": self.link.G},
            "slot_duration_s": self.slot_duration,
            "window": {"start_s": w.start, "end_s": w.end, "mask_elevation_rad": w.mask_elevation},
            "rows": [
                dict(zip(ROW_KEYS, (fv.time, fv.doppler, fv.elevation, fv.azimuth, fv.rsp, fv.rtt)))
                for fv in self.reference
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Ccm":
        e, s, lk, w = doc["elements"], doc["station"], doc["link"], doc["window"]
        reference = tuple(
            FeatureVector(
                doppler=r["doppler_hz"], elevation=r["elevation_rad"], azimuth=r["azimuth_rad"],
                rsp=r["rsp_w"], rtt=r["rtt_s"], time=r["time_s"],
            )
            for r in doc["rows"]
        )
        return cls(
            slot_times=np.array([fv.time for fv in reference]),
            reference=reference,
            slot_duration=doc["slot_duration_s"],
            elements=KeplerianElements(e["a_m"], e["e"], e["i_rad"], e["raan_rad"], e["argp_rad"], e["nu0_rad"], e["epoch_s"]),
            station=GroundStation(s["latitude_rad"], s["longitude_rad"], s["altitude_m"]),
            link=LinkParams(lk["carrier_hz"], lk["tx_power_w"], lk["gain"]),
            window=VisibilityWindow(w["start_s"], w["end_s"], w["mask_elevation_rad"]),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=1))
        return path

    @classmethod
    def load(cls, path) -> "Ccm":
        return cls.from_json(json.loads(Path(path).read_text()))


def slot_grid(window: VisibilityWindow, slot_duration: float) -> np.ndarray:
    if not slot_duration > 0:
        raise ConfigurationError("slot duration must be positive")
    if window.duration < slot_duration:
        raise ConfigurationError(
            f"window of {window.duration:.3f} s is shorter than one slot ({slot_duration} s)"
        )
    m = int(math.floor(window.duration / slot_duration + 1e-9)) + 1
    return window.start + slot_duration * np.arange(m)


def trajectory_table(elements: KeplerianElements, gs: GroundStation, link: LinkParams, times) -> np.ndarray:
    """Features of the satellite flying ``elements`` at each of ``times``."""
    return feature_table(eci_to_ecef(propagate(elements, np.asarray(times, dtype=float))), gs, link)


def build_ccm(
    elements: KeplerianElements,
    gs: GroundStation,
    window: VisibilityWindow,
    slot_duration: float = 1.0,
    link: LinkParams | None = None,
) -> Ccm:
    link = link or LinkParams()
    times = slot_grid(window, slot_duration)
    table = trajectory_table(elements, gs, link, times)
    reference = tuple(
        FeatureVector(**{name: float(row[j]) for j, name in enumerate(FEATURES)}, time=float(t))
        for t, row in zip(times, table)
    )
    return Ccm(times, reference, float(slot_duration), elements, gs, link, window)


def lookup(ccm: Ccm, slot_index: int) -> FeatureVector:
    if not 0 <= slot_index < len(ccm):
        raise IndexError(f"slot {slot_index} outside CCM grid of {len(ccm)} slots")
    return ccm.reference[slot_index]
