"""Coupled physical features seen by a ground verifier, plus measurement noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .orbital_mechanics import C, EcefState, GroundStation, topocentric

# column order of every feature table in the package
FEATURES = ("doppler", "elevation", "azimuth", "rsp", "rtt")


@dataclass(frozen=True)
class LinkParams:
    f_c: float = 2.0e9
    P_t: float = 1.0
    G: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"LinkParams.{f.name} must be strictly positive")


@dataclass(frozen=True)
class FeatureVector:
    doppler: float
    elevation: float
    azimuth: float
    rsp: float
    rtt: float
    time: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURES], dtype=float)


@dataclass(frozen=True)
class NoiseModel:
    """Per-feature measurement standard deviations (angles in rad, RSP in dB)."""

    sigma_elevation: float = math.radians(1.0)
    sigma_azimuth: float = math.radians(1.0)
    sigma_doppler: float = 200.0
    sigma_rtt: float = 100e-9
    sigma_rsp_db: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"NoiseModel.{f.name} must be non-negative")

    def sigmas(self) -> np.ndarray:
        """Standard deviations in ``FEATURES`` order."""
        return np.array(
            [self.sigma_doppler, self.sigma_elevation, self.sigma_azimuth, self.sigma_rsp_db, self.sigma_rtt]
        )


@dataclass(frozen=True)
class Measurement(FeatureVector):
    source_seed: int | None = None


def doppler(range_rate, f_c: float):
    """Doppler shift in Hz; positive while the range is shrinking."""
    if not f_c > 0:
        raise ValueError("carrier frequency must be positive")
    return -(f_c / C) * range_rate


def rtt(slant_range):
    if not np.all(np.asarray(slant_range) > 0):
        raise ValueError("slant range must be positive")
    return 2.0 * slant_range / C


def rsp(slant_range, link: LinkParams):
    """Received power from the Friis equation, W."""
    if not np.all(np.asarray(slant_range) > 0):
        raise ValueError("slant range must be positive")
    return link.P_t * link.G * C**2 / (4.0 * math.pi * link.f_c * slant_range) ** 2


def feature_table(sat: EcefState, gs: GroundStation, link: LinkParams) -> np.ndarray:
    """Features for a batch of states as an ``(n, 5)`` array in ``FEATURES`` order."""
    obs = topocentric(sat, gs)
    return np.stack(
        [
            np.atleast_1d(doppler(obs.range_rate, link.f_c)),
            np.atleast_1d(obs.elevation),
            np.atleast_1d(obs.azimuth),
            np.atleast_1d(rsp(obs.slant_range, link)),
            np.atleast_1d(rtt(obs.slant_range)),
        ],
        axis=-1,
    )


def feature_vector(sat: EcefState, gs: GroundStation, link: LinkParams) -> FeatureVector:
    obs = topocentric(sat, gs)
    return FeatureVector(
        doppler=float(doppler(obs.range_rate, link.f_c)),
        elevation=float(obs.elevation),
        azimuth=float(obs.azimuth),
        rsp=float(rsp(obs.slant_range, link)),
        rtt=float(rtt(obs.slant_range)),
        time=float(sat.time),
    )


def perturb(table: np.ndarray, draws: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Apply standard-normal ``draws`` (same shape as ``table``) as measurement noise.

    Additive for every feature except RSP, which is scaled in the dB domain so it
    stays positive. Azimuth is re-wrapped to [0, 2pi).
    """
    scaled = draws * noise.sigmas()
    out = table + scaled
    out[..., 2] = np.mod(out[..., 2], 2.0 * math.pi)
    out[..., 3] = table[..., 3] * 10.0 ** (scaled[..., 3] / 10.0)
    return out


def add_noise(fv: FeatureVector, noise: NoiseModel, rng: np.random.Generator, seed: int | None = None) -> Measurement:
    """One noisy measurement of ``fv``.

    Exactly five standard normals are consumed from ``rng`` per call, in
    ``FEATURES`` order, whatever the sigmas are. ``seed`` is recorded as the
    measurement's provenance.
    """
    noisy = perturb(fv.as_array()[None, :], rng.standard_normal((1, len(FEATURES))), noise)[0]
    if seed is None:
        seed = _seed_of(rng)
    return Measurement(*map(float, noisy), time=fv.time, source_seed=seed)


def _seed_of(rng: np.random.Generator) -> int | None:
    seq = getattr(rng.bit_generator, "seed_seq", None)
    entropy = getattr(seq, "entropy", None)
    return int(entropy) if isinstance(entropy, int) else None
