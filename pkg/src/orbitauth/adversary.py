"""Adversary (Trudy) geometries and the signals she returns to a challenge."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .ccm import Ccm, trajectory_table
from .observables import FEATURES, FeatureVector, Measurement, NoiseModel, add_noise
from .orbital_mechanics import (
    R_EARTH,
    GroundStation,
    KeplerianElements,
    OrbitError,
    circular_orbit_through,
    ecef_to_eci_position,
    ground_station_ecef,
    look,
    propagate,
)

DOPPLER = FEATURES.index("doppler")
RTT = FEATURES.index("rtt")


class GeometryError(OrbitError):
    pass


class Knowledge(str, enum.Enum):
    BLIND = "blind"
    INFORMED = "informed"


class Placement(str, enum.Enum):
    COPLANAR_OFFSET = "coplanar"
    COLLINEAR_AT_T1 = "collinear"


@dataclass(frozen=True)
class AdversaryConfig:
    altitude: float
    knowledge: Knowledge = Knowledge.BLIND
    placement: Placement = Placement.COPLANAR_OFFSET
    doppler_precompensation: bool = False
    alignment_time: float | None = None
    along_track_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "knowledge", Knowledge(self.knowledge))
        object.__setattr__(self, "placement", Placement(self.placement))
        if not self.altitude > 0:
            raise ValueError("adversary altitude must be positive")
        if self.doppler_precompensation and self.knowledge is not Knowledge.INFORMED:
            raise ValueError("doppler_precompensation requires an informed adversary")
        if self.placement is Placement.COLLINEAR_AT_T1 and self.alignment_time is None:
            raise ValueError("collinear placement requires an alignment_time")


@dataclass(frozen=True)
class AdversaryState:
    elements: KeplerianElements
    config: AdversaryConfig


def construct_collinear_orbit(
    alice: KeplerianElements, gs: GroundStation, t1: float, trudy_altitude: float
) -> KeplerianElements:
    """Circular orbit that sits on the station -> Alice ray at ``t1``.

    Trudy's radius is ``R_EARTH + trudy_altitude``; her direction of motion is
    Alice's inertial velocity projected onto Trudy's local horizontal.
    """
    obs = look(alice, gs, t1)
    if obs.elevation < 0:
        raise GeometryError("Alice is below the horizon at the alignment time")
    alice_state = propagate(alice, t1)
    station = ecef_to_eci_position(ground_station_ecef(gs), t1)
    los = alice_state.position - station
    los /= np.linalg.norm(los)
    radius = R_EARTH + trudy_altitude
    # |station + s*los| = radius, s > 0
    b = float(np.dot(station, los))
    disc = b * b - float(np.dot(station, station)) + radius * radius
    if disc < 0:
        raise GeometryError(f"the line of sight never reaches radius {radius:.0f} m")
    s = -b + math.sqrt(disc)
    if s <= 0:
        raise GeometryError(f"radius {radius:.0f} m is not reachable above the horizon")
    return circular_orbit_through(station + s * los, alice_state.velocity, t1)


def construct_coplanar_offset_orbit(
    alice: KeplerianElements, trudy_altitude: float, along_track_offset: float = 0.0
) -> KeplerianElements:
    return KeplerianElements(
        a=R_EARTH + trudy_altitude,
        e=0.0,
        i=alice.i,
        raan=alice.raan,
        argp=alice.argp,
        nu0=alice.nu0 + along_track_offset,
        epoch=alice.epoch,
    )


def place_adversary(alice: KeplerianElements, gs: GroundStation, config: AdversaryConfig) -> AdversaryState:
    if config.placement is Placement.COLLINEAR_AT_T1:
        elements = construct_collinear_orbit(alice, gs, config.alignment_time, config.altitude)
    else:
        elements = construct_coplanar_offset_orbit(alice, config.altitude, config.along_track_offset)
    return AdversaryState(elements, config)


def physical_table(state: AdversaryState, ccm: Ccm) -> np.ndarray:
    """Trudy's true features on the CCM slot grid, ``(M, 5)``."""
    return trajectory_table(state.elements, ccm.station, ccm.link, ccm.slot_times)


def response_table(state: AdversaryState, ccm: Ccm) -> np.ndarray:
    """What Trudy transmits at every slot before measurement noise.

    Angles, RSP and RTT are her physical values; with pre-compensation the
    Doppler column is replaced by the reference Doppler.
    """
    table = physical_table(state, ccm)
    if state.config.doppler_precompensation:
        table[:, DOPPLER] = ccm.table[:, DOPPLER]
    return table


def trudy_response(
    state: AdversaryState,
    ccm: Ccm,
    slot_index: int,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> Measurement:
    if not 0 <= slot_index < len(ccm):
        raise IndexError(f"slot {slot_index} outside CCM grid")
    t = float(ccm.slot_times[slot_index])
    row = trajectory_table(state.elements, ccm.station, ccm.link, [t])[0]
    if state.config.doppler_precompensation:
        row[DOPPLER] = ccm.reference[slot_index].doppler
    fv = FeatureVector(**{name: float(row[j]) for j, name in enumerate(FEATURES)}, time=t)
    return add_noise(fv, noise, rng)


def causality_violation(trudy_rtt, reference_rtt):
    """True where Trudy's physical round trip exceeds the legitimate one."""
    if not (np.all(np.asarray(trudy_rtt) > 0) and np.all(np.asarray(reference_rtt) > 0)):
        raise ValueError("round-trip times must be positive")
    out = np.asarray(trudy_rtt) > np.asarray(reference_rtt)
    return bool(out) if out.ndim == 0 else out
