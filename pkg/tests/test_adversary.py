import math

import numpy as np
import pytest

from orbitauth.adversary import (
    AdversaryConfig,
    GeometryError,
    Knowledge,
    Placement,
    causality_violation,
    construct_collinear_orbit,
    construct_coplanar_offset_orbit,
    physical_table,
    response_table,
    trudy_response,
)
from orbitauth.experiment import pass_over_station
from orbitauth.observables import NoiseModel
from orbitauth.orbital_mechanics import R_EARTH, GroundStation, look, orbital_period, propagate


@pytest.fixture(scope="module")
def alice(station):
    return pass_over_station(station)


def _collinear(alice, station, t1, alt):
    return construct_collinear_orbit(alice, station, t1, alt)


@pytest.mark.parametrize("t1", [-200.0, -60.0, 0.0, 150.0])
@pytest.mark.parametrize("alt", [500e3, 900e3, 1200e3])
def test_collinear_alignment_exact(alice, station, t1, alt):
    trudy = _collinear(alice, station, t1, alt)
    a, b = look(alice, station, t1), look(trudy, station, t1)
    assert abs(a.elevation - b.elevation) < 1e-9
    assert abs(math.remainder(a.azimuth - b.azimuth, 2 * math.pi)) < 1e-9
    assert np.linalg.norm(propagate(trudy, t1).position) == pytest.approx(R_EARTH + alt, abs=1e-6)
    assert trudy.e == 0.0


def test_collinear_other_station():
    gs = GroundStation.from_degrees(-20.0, 40.0)
    alice = pass_over_station(gs, inclination=math.radians(70))
    trudy = _collinear(alice, gs, 60.0, 1200e3)
    a, b = look(alice, gs, 60.0), look(trudy, gs, 60.0)
    assert abs(a.elevation - b.elevation) < 1e-9
    assert abs(math.remainder(a.azimuth - b.azimuth, 2 * math.pi)) < 1e-9


def test_collinear_drift_after_alignment(alice, station):
    t1 = -140.0
    trudy = _collinear(alice, station, t1, 1200e3)
    t = t1 + np.arange(0.0, 61.0)
    # rising pass: the slower, higher Trudy lags below Alice
    diff = np.abs(look(trudy, station, t).elevation - look(alice, station, t).elevation)
    assert diff[30] > 0
    assert diff[31] > diff[30]
    assert np.all(np.diff(diff) >= 0)


def test_collinear_below_horizon_rejected(alice, station):
    with pytest.raises(GeometryError):
        _collinear(alice, station, 2000.0, 1200e3)


def test_collinear_unreachable_radius(alice, station):
    # a sphere inside the Earth cannot be hit on the way out
    with pytest.raises(GeometryError):
        _collinear(alice, station, 0.0, -10e3)


def test_coplanar_degenerate_copy(alice, station):
    copy = construct_coplanar_offset_orbit(alice, alice.a - R_EARTH, 0.0)
    t = np.linspace(-300, 300, 7)
    np.testing.assert_allclose(propagate(copy, t).position, propagate(alice, t).position, atol=1e-6)


def test_coplanar_period_and_mismatch(preset):
    cfg, scenario = preset("scenario-1")
    trudy = scenario.adversary.elements
    assert orbital_period(trudy.a) > orbital_period(cfg.alice.a)
    diff = np.abs(physical_table(scenario.adversary, scenario.ccm)[:, 1] - scenario.ccm.table[:, 1])
    assert np.mean(diff > cfg.noise.sigma_elevation) > 0.9


def test_config_invariants():
    with pytest.raises(ValueError):
        AdversaryConfig(1200e3, Knowledge.BLIND, doppler_precompensation=True)
    with pytest.raises(ValueError):
        AdversaryConfig(1200e3, Knowledge.INFORMED, Placement.COLLINEAR_AT_T1)
    cfg = AdversaryConfig(1200e3, "informed", "collinear", True, 0.0)
    assert cfg.knowledge is Knowledge.INFORMED and cfg.placement is Placement.COLLINEAR_AT_T1


def test_precompensation_masks_doppler(preset):
    _, scenario = preset("scenario-2")
    tab = response_table(scenario.adversary, scenario.ccm)
    np.testing.assert_array_equal(tab[:, 0], scenario.ccm.table[:, 0])


def test_no_precompensation_doppler_mismatch(preset):
    _, scenario = preset("scenario-1")
    ref = scenario.ccm.table[:, 0]
    tab = response_table(scenario.adversary, scenario.ccm)
    k0 = int(np.argmin(np.abs(ref)))
    steep = slice(k0 - 40, k0 + 41)
    mismatch = np.abs(tab[steep, 0] - ref[steep])
    # the two S-curves cross zero together but with different slopes
    assert mismatch.max() > 10 * 200.0
    assert np.mean(mismatch > 200.0) > 0.9


def test_trudy_response_matches_table(preset):
    cfg, scenario = preset("scenario-2")
    ccm = scenario.ccm
    tab = response_table(scenario.adversary, ccm)
    zero = NoiseModel(0, 0, 0, 0, 0)
    for k in (0, cfg.policy.start_slot, len(ccm) - 1):
        m = trudy_response(scenario.adversary, ccm, k, zero, np.random.default_rng(0))
        np.testing.assert_allclose(m.as_array(), tab[k], rtol=1e-12)
    with pytest.raises(IndexError):
        trudy_response(scenario.adversary, ccm, len(ccm), zero, np.random.default_rng(0))


def test_collinear_rtt_longer(preset):
    cfg, scenario = preset("scenario-2")
    k = cfg.policy.start_slot
    trudy = physical_table(scenario.adversary, scenario.ccm)
    assert trudy[k, 4] > scenario.ccm.table[k, 4]


def test_causality_violation():
    assert causality_violation(5e-3, 4e-3) is True
    assert causality_violation(4e-3, 4e-3) is False
    assert causality_violation(3e-3, 4e-3) is False
    np.testing.assert_array_equal(causality_violation([2.0, 1.0], [1.0, 2.0]), [True, False])
    with pytest.raises(ValueError):
        causality_violation(0.0, 1.0)


def test_causality_lower_adversary(preset):
    cfg, scenario = preset("scenario-2", 500e3)
    k = cfg.policy.start_slot
    trudy = physical_table(scenario.adversary, scenario.ccm)
    assert causality_violation(trudy[k, 4], scenario.ccm.table[k, 4]) is False
