"""Two-body Keplerian propagation and the perifocal -> ECI -> ECEF -> ENU chain.

Times are seconds elapsed since the J2000 epoch. Every function that takes a
time accepts either a scalar or a 1-D array; array inputs produce arrays of
shape ``(n,)`` for scalars and ``(n, 3)`` for vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
SECONDS_PER_DAY = 86_400.0

KEPLER_TOL = 1e-12
KEPLER_MAX_ITER = 50

GMST_AT_J2000_DEG = 280.4606
GMST_RATE_DEG_PER_DAY = 360.9856473


class OrbitError(ValueError):
    """Invalid orbital input or impossible geometry."""


class ConvergenceError(ArithmeticError):
    """Kepler's equation did not converge."""


@dataclass(frozen=True)
class PhysicalConstants:
    mu: float = 3.986e14
    c: float = 299_792_458.0
    earth_radius: float = 6_378_137.0
    earth_rotation_rate: float = 7.2921159e-5

    def __post_init__(self):
        for name in ("mu", "c", "earth_radius", "earth_rotation_rate"):
            if not getattr(self, name) > 0:
                raise OrbitError(f"{name} must be strictly positive")


CONSTANTS = PhysicalConstants()
MU = CONSTANTS.mu
C = CONSTANTS.c
R_EARTH = CONSTANTS.earth_radius
OMEGA_EARTH = CONSTANTS.earth_rotation_rate


def wrap_2pi(angle):
    return np.mod(angle, TWO_PI)


@dataclass(frozen=True)
class KeplerianElements:
    """Orbital identity: semi-major axis (m), eccentricity, angles (rad), epoch (s).

    ``raan``, ``argp`` and ``nu0`` are normalized to [0, 2pi) on construction.
    """

    a: float
    e: float
    i: float
    raan: float
    argp: float
    nu0: float
    epoch: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.e < 1.0:
            raise OrbitError(f"eccentricity must be in [0, 1), got {self.e}")
        if not self.a * (1.0 - self.e) > R_EARTH:
            raise OrbitError(
                f"perigee radius {self.a * (1.0 - self.e):.1f} m is not above the Earth surface"
            )
        if not 0.0 <= self.i <= math.pi:
            raise OrbitError(f"inclination must be in [0, pi], got {self.i}")
        for name in ("raan", "argp", "nu0"):
            object.__setattr__(self, name, float(wrap_2pi(getattr(self, name))))

    @property
    def altitude(self) -> float:
        """Altitude above the spherical Earth (meaningful for circular orbits)."""
        return self.a - R_EARTH


@dataclass(frozen=True)
class EciState:
    position: np.ndarray
    velocity: np.ndarray
    time: float | np.ndarray


@dataclass(frozen=True)
class EcefState:
    position: np.ndarray
    velocity: np.ndarray
    time: float | np.ndarray


@dataclass(frozen=True)
class GroundStation:
    """Spherical-Earth station: latitude/longitude in rad, altitude in m."""

    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not -math.pi / 2 <= self.latitude <= math.pi / 2:
            raise OrbitError(f"latitude out of range: {self.latitude}")
        lon = math.remainder(self.longitude, TWO_PI)  # -> [-pi, pi]
        if lon == -math.pi:
            lon = math.pi
        object.__setattr__(self, "longitude", lon)

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float, altitude: float = 0.0):
        return cls(math.radians(lat_deg), math.radians(lon_deg), altitude)


@dataclass(frozen=True)
class TopocentricObservation:
    slant_range: float | np.ndarray
    range_rate: float | np.ndarray
    elevation: float | np.ndarray
    azimuth: float | np.ndarray
    time: float | np.ndarray


def _check_positive_a(a):
    if not np.all(np.asarray(a) > 0):
        raise OrbitError("semi-major axis must be positive")


def circular_speed(a):
    """Vis-viva speed of a circular orbit of radius ``a``."""
    _check_positive_a(a)
    return np.sqrt(MU / np.asarray(a, dtype=float)) if np.ndim(a) else math.sqrt(MU / a)


def mean_motion(a):
    _check_positive_a(a)
    return math.sqrt(MU / a**3)


def orbital_period(a):
    _check_positive_a(a)
    return TWO_PI * math.sqrt(a**3 / MU)


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def perifocal_to_eci(elements: KeplerianElements) -> np.ndarray:
    """Intrinsic z-x'-z'' rotation by (raan, i, argp)."""
    return rot_z(elements.raan) @ rot_x(elements.i) @ rot_z(elements.argp)


def true_to_mean_anomaly(nu: float, e: float) -> float:
    if e == 0.0:
        return nu
    ecc_anom = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(nu / 2), math.sqrt(1.0 + e) * math.cos(nu / 2))
    return ecc_anom - e * math.sin(ecc_anom)


def solve_kepler(mean_anomaly, e: float):
    """Eccentric anomaly from mean anomaly by Newton iteration.

    Raises ConvergenceError if the update does not drop below 1e-12 rad
    within 50 iterations.
    """
    M = np.asarray(mean_anomaly, dtype=float)
    if e == 0.0:
        return M.copy() if M.ndim else float(M)
    # iterate on the reduced anomaly, keep the whole revolutions aside
    revs = np.round(M / TWO_PI) * TWO_PI
    m = M - revs
    E = m.copy()
    for _ in range(KEPLER_MAX_ITER):
        step = (E - e * np.sin(E) - m) / (1.0 - e * np.cos(E))
        E = E - step
        if np.all(np.abs(step) < KEPLER_TOL):
            out = E + revs
            return out if out.ndim else float(out)
    raise ConvergenceError(f"Kepler solver did not converge in {KEPLER_MAX_ITER} iterations (e={e})")


def propagate(elements: KeplerianElements, t) -> EciState:
    """Two-body state at time(s) ``t``; works forward and backward from the epoch."""
    el = elements
    times = np.asarray(t, dtype=float)
    M = true_to_mean_anomaly(el.nu0, el.e) + mean_motion(el.a) * (times - el.epoch)
    E = np.asarray(solve_kepler(M, el.e))
    cos_e, sin_e = np.cos(E), np.sin(E)
    sqrt_1me2 = math.sqrt(1.0 - el.e**2)
    radius = el.a * (1.0 - el.e * cos_e)
    zeros = np.zeros_like(E)
    pos_pf = np.stack([el.a * (cos_e - el.e), el.a * sqrt_1me2 * sin_e, zeros], axis=-1)
    k = math.sqrt(MU * el.a) / radius
    vel_pf = np.stack([-k * sin_e, k * sqrt_1me2 * cos_e, zeros], axis=-1)
    R = perifocal_to_eci(el)
    pos = pos_pf @ R.T
    vel = vel_pf @ R.T
    return EciState(pos, vel, times if times.ndim else float(times))


def gmst(t):
    """Greenwich mean sidereal angle in [0, 2pi) from the linear sidereal model."""
    days = np.asarray(t, dtype=float) / SECONDS_PER_DAY
    # 360.9856473 d = 360 d + 0.9856473 d; drop whole turns before scaling
    deg = GMST_AT_J2000_DEG + 360.0 * np.mod(days, 1.0) + (GMST_RATE_DEG_PER_DAY - 360.0) * days
    out = np.mod(np.radians(np.mod(deg, 360.0)), TWO_PI)
    return out if out.ndim else float(out)


def _rotate_z(vec: np.ndarray, angle) -> np.ndarray:
    """Apply R_z(angle) to vectors of shape (..., 3), one angle per vector."""
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = vec[..., 0], vec[..., 1], vec[..., 2]
    return np.stack([c * x - s * y, s * x + c * y, z], axis=-1)


def eci_to_ecef(state: EciState) -> EcefState:
    theta = gmst(state.time)
    pos = _rotate_z(state.position, -np.asarray(theta))
    vel = _rotate_z(state.velocity, -np.asarray(theta))
    # transport term: -omega_E z x r
    transport = np.stack([-pos[..., 1], pos[..., 0], np.zeros_like(pos[..., 2])], axis=-1)
    return EcefState(pos, vel - OMEGA_EARTH * transport, state.time)


def ecef_to_eci_position(position: np.ndarray, t) -> np.ndarray:
    return _rotate_z(np.asarray(position, dtype=float), np.asarray(gmst(t)))


def ground_station_ecef(gs: GroundStation) -> np.ndarray:
    rho = R_EARTH + gs.altitude
    cl = math.cos(gs.latitude)
    return np.array([rho * cl * math.cos(gs.longitude), rho * cl * math.sin(gs.longitude), rho * math.sin(gs.latitude)])


def enu_basis(gs: GroundStation) -> np.ndarray:
    """Rows are the East, North, Up unit vectors in ECEF."""
    sl, cl = math.sin(gs.latitude), math.cos(gs.latitude)
    sp, cp = math.sin(gs.longitude), math.cos(gs.longitude)
    return np.array([[-sp, cp, 0.0], [-sl * cp, -sl * sp, cl], [cl * cp, cl * sp, sl]])


def topocentric(sat: EcefState, gs: GroundStation) -> TopocentricObservation:
    """Slant range, range rate (receding positive), elevation and azimuth."""
    d = np.asarray(sat.position, dtype=float) - ground_station_ecef(gs)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r <= 1e-6):
        raise OrbitError("satellite and station positions coincide")
    enu = d @ enu_basis(gs).T
    elevation = np.arctan2(enu[..., 2], np.hypot(enu[..., 0], enu[..., 1]))
    azimuth = np.mod(np.arctan2(enu[..., 0], enu[..., 1]), TWO_PI)
    range_rate = np.sum(d * sat.velocity, axis=-1) / r
    if r.ndim == 0:
        return TopocentricObservation(float(r), float(range_rate), float(elevation), float(azimuth), sat.time)
    return TopocentricObservation(r, range_rate, elevation, azimuth, sat.time)


def look(elements: KeplerianElements, gs: GroundStation, t) -> TopocentricObservation:
    """Shortcut for propagate -> eci_to_ecef -> topocentric."""
    return topocentric(eci_to_ecef(propagate(elements, t)), gs)


def circular_orbit_through(position, velocity_hint, epoch: float) -> KeplerianElements:
    """Circular orbit passing through ECI ``position`` at ``epoch``.

    The direction of motion is ``velocity_hint`` projected onto the local
    horizontal plane; the speed follows from vis-viva at that radius.
    """
    p = np.asarray(position, dtype=float)
    radius = float(np.linalg.norm(p))
    p_hat = p / radius
    v = np.asarray(velocity_hint, dtype=float)
    v_perp = v - np.dot(v, p_hat) * p_hat
    if np.linalg.norm(v_perp) < 1e-12 * max(np.linalg.norm(v), 1.0):
        raise OrbitError("velocity hint is radial; orbital plane undefined")
    h_hat = np.cross(p_hat, v_perp)
    h_hat /= np.linalg.norm(h_hat)
    incl = math.acos(float(np.clip(h_hat[2], -1.0, 1.0)))
    node = np.array([-h_hat[1], h_hat[0], 0.0])
    node_norm = np.linalg.norm(node)
    if node_norm < 1e-12:
        raan = 0.0
        u = math.atan2(p_hat[1], p_hat[0]) if h_hat[2] > 0 else math.atan2(-p_hat[1], p_hat[0])
    else:
        node /= node_norm
        raan = math.atan2(node[1], node[0])
        u = math.atan2(float(np.dot(np.cross(node, p_hat), h_hat)), float(np.dot(node, p_hat)))
    return KeplerianElements(a=radius, e=0.0, i=incl, raan=raan, argp=0.0, nu0=u, epoch=epoch)
