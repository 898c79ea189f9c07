"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import dataclasses
import math
import time

import numpy as np
import pytest
from scipy import stats

from orbitauth.adversary import causality_violation, physical_table
from orbitauth.auth_protocol import LEGITIMATE, FeatureSet, dep_versus_n, estimate_dep, simulate_statistics
from orbitauth.ccm import build_ccm, visibility_window
from orbitauth.cli import main
from orbitauth.experiment import first_pass, pass_over_station, read_summary
from orbitauth.orbital_mechanics import (
    MU,
    R_EARTH,
    GroundStation,
    KeplerianElements,
    look,
    orbital_period,
    propagate,
)

TRIALS = 10_000
SLACK = 2 / math.sqrt(TRIALS)
SEED = 2024

pytestmark = pytest.mark.slow


def _passes():
    """A few 600 km passes with different geometry: high, low, southern, retrograde-ish."""
    mask = math.radians(10)
    cases = [
        (GroundStation.from_degrees(35.0, 129.0), 53.0, 0.5),
        (GroundStation.from_degrees(35.0, 129.0), 53.0, 8.0),
        (GroundStation.from_degrees(-33.9, 18.4), 97.6, 3.0),
        (GroundStation.from_degrees(60.0, -150.0), 120.0, -5.0),
    ]
    for gs, inc, offset in cases:
        alice = pass_over_station(gs, 600e3, math.radians(inc), 0.0, math.radians(offset))
        yield build_ccm(alice, gs, first_pass(alice, gs, mask), 1.0)


def test_c1_physics_coupling(criterion):
    t0 = time.perf_counter()
    worst_tau = worst_rdot = 0.0
    crossing_ok = True
    for ccm in _passes():
        tab, dt = ccm.table, ccm.slot_duration
        tau_dot = (tab[2:, 4] - tab[:-2, 4]) / (2 * dt)
        expected = -2 * tab[1:-1, 0] / ccm.link.f_c
        worst_tau = max(worst_tau, np.max(np.abs(tau_dot - expected) / np.abs(expected)))

        k_zero = int(np.flatnonzero(np.diff(np.sign(tab[:, 0])) != 0)[0])
        crossing_ok &= abs(k_zero - int(np.argmin(tab[:, 4]))) <= 1

        t = ccm.slot_times
        obs = look(ccm.elements, ccm.station, t)
        h = 0.1
        fd = (look(ccm.elements, ccm.station, t + h).slant_range - look(ccm.elements, ccm.station, t - h).slant_range) / (2 * h)
        worst_rdot = max(worst_rdot, np.max(np.abs(obs.range_rate - fd) / np.abs(fd)))
    elapsed = time.perf_counter() - t0
    ok = worst_tau <= 1e-3 and crossing_ok and worst_rdot <= 1e-3 and elapsed < 5
    criterion(
        "C1 physics coupling",
        ok,
        f"tau_dot rel {worst_tau:.1e}, crossing within 1 slot {crossing_ok}, rdot rel {worst_rdot:.1e}, {elapsed:.2f}s",
    )


def test_c2_propagator(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    drift = ret = viva = 0.0
    for _ in range(20):
        a = R_EARTH + rng.uniform(300e3, 36_000e3)
        circ = KeplerianElements(a, 0.0, rng.uniform(0, math.pi), *rng.uniform(0, 2 * math.pi, 3), rng.uniform(-1e6, 1e6))
        period = orbital_period(a)
        t = circ.epoch + np.linspace(0.0, period, 721)
        r = np.linalg.norm(propagate(circ, t).position, axis=-1)
        drift = max(drift, np.max(np.abs(r - a)) / a)
        p0, p1 = propagate(circ, circ.epoch).position, propagate(circ, circ.epoch + period).position
        ret = max(ret, np.linalg.norm(p1 - p0) / np.linalg.norm(p0))

        e = rng.uniform(0.0, 0.2)
        ecc = dataclasses.replace(circ, a=(R_EARTH + 400e3) / (1 - e) + rng.uniform(0, 5e6), e=e)
        s = propagate(ecc, ecc.epoch + np.linspace(0.0, 3 * orbital_period(ecc.a), 500))
        rr = np.linalg.norm(s.position, axis=-1)
        v2 = np.sum(s.velocity**2, axis=-1)
        expected = MU * (2 / rr - 1 / ecc.a)
        viva = max(viva, np.max(np.abs(v2 - expected) / expected))
    elapsed = time.perf_counter() - t0
    ok = drift < 1e-9 and ret < 1e-6 and viva < 1e-9 and elapsed < 5
    criterion("C2 propagator", ok, f"radius drift {drift:.1e}, return {ret:.1e}, vis-viva {viva:.1e}, {elapsed:.2f}s")


def test_c3_null_distribution(preset, criterion):
    _, scenario = preset("scenario-1")
    n, fs = 5, FeatureSet(use_doppler=True, use_elevation=True)
    sc = dataclasses.replace(scenario, features=fs)
    dof = n * len(fs)
    t0 = time.perf_counter()
    legit, _ = simulate_statistics(sc, n, TRIALS, SEED, LEGITIMATE)
    elapsed = time.perf_counter() - t0
    mean_ok = abs(legit.mean() - dof) <= 0.05 * dof
    # 20 equiprobable bins under the chi-square law
    edges = stats.chi2.ppf(np.linspace(0, 1, 21), dof)
    observed, _ = np.histogram(legit, bins=edges)
    p = stats.chisquare(observed).pvalue
    ok = mean_ok and p > 0.01 and elapsed < 30
    criterion("C3 null chi-square", ok, f"mean {legit.mean():.3f} vs {dof}, GOF p {p:.3f}, {elapsed:.2f}s")


def test_c4_scenario_one(preset, criterion):
    cfg, scenario = preset("scenario-1")
    assert cfg.adversary.knowledge.value == "blind" and cfg.policy.kind.value == "fixed"
    t0 = time.perf_counter()
    res = estimate_dep(scenario, 1, TRIALS, SEED)
    elapsed = time.perf_counter() - t0
    criterion("C4 scenario I, N=1", res.min_dep <= 0.05 and elapsed < 60, f"min DEP {res.min_dep:.4f}, {elapsed:.2f}s")


def test_c5_scenario_two(preset, criterion):
    cfg, scenario = preset("scenario-2")
    n_max = len(scenario.ccm) - cfg.policy.start_slot
    ns = [1, 5, 10, 20, 50, n_max]
    t0 = time.perf_counter()
    deps = [r.min_dep for r in dep_versus_n(scenario, ns, TRIALS, SEED)]
    elapsed = time.perf_counter() - t0
    shape = [d for n, d in zip(ns, deps) if n <= 50]
    nonincreasing = all(b <= a + SLACK for a, b in zip(shape, shape[1:]))
    ok = deps[0] >= 0.4 and nonincreasing and min(deps[4], deps[-1]) <= 0.1 and elapsed < 300
    curve = ", ".join(f"{n}:{d:.3f}" for n, d in zip(ns, deps))
    criterion("C5 scenario II shape", ok, f"min DEP {{{curve}}}, {elapsed:.1f}s")


def test_c6_random_dominates_fixed(preset, criterion):
    _, fixed = preset("scenario-2")
    _, rand = preset("scenario-3")
    ns = [2, 5, 10, 20]
    t0 = time.perf_counter()
    f = [r.min_dep for r in dep_versus_n(fixed, ns, TRIALS, SEED)]
    r = [r.min_dep for r in dep_versus_n(rand, ns, TRIALS, SEED)]
    elapsed = time.perf_counter() - t0
    ok = all(b <= a for a, b in zip(f, r)) and f[1] - r[1] > SLACK and elapsed < 300
    pairs = ", ".join(f"{n}:{a:.3f}/{b:.3f}" for n, a, b in zip(ns, f, r))
    criterion("C6 scenario III dominance", ok, f"fixed/random {{{pairs}}}, {elapsed:.1f}s")


def test_c7_precompensation_masks_doppler(preset, criterion):
    cfg, scenario = preset("scenario-2")
    assert cfg.adversary.doppler_precompensation
    sc = dataclasses.replace(scenario, features=FeatureSet(use_doppler=True, use_elevation=False))
    t0 = time.perf_counter()
    deps = [r.min_dep for r in dep_versus_n(sc, [1, 10, 50], TRIALS, SEED)]
    elapsed = time.perf_counter() - t0
    ok = all(abs(d - 0.5) <= 3 / math.sqrt(TRIALS) for d in deps) and elapsed < 60
    criterion("C7 pre-compensation", ok, f"min DEP {[round(d, 4) for d in deps]}, {elapsed:.2f}s")


def test_c8_causality(preset, criterion):
    t0 = time.perf_counter()
    cfg_hi, hi = preset("scenario-2", 1200e3)
    k1 = cfg_hi.policy.start_slot
    slots = slice(k1, k1 + 50)
    trudy = physical_table(hi.adversary, hi.ccm)
    every = bool(np.all(causality_violation(trudy[slots, 4], hi.ccm.table[slots, 4])))

    cfg_lo, lo = preset("scenario-2", 500e3)
    k1 = cfg_lo.policy.start_slot
    low = physical_table(lo.adversary, lo.ccm)
    at_t1 = causality_violation(low[k1, 4], lo.ccm.table[k1, 4])
    elapsed = time.perf_counter() - t0
    ok = every and at_t1 is False and elapsed < 1
    criterion("C8 causality flag", ok, f"1200 km all 50 slots {every}, 500 km at t1 {at_t1}, {elapsed:.3f}s")


def test_c9_determinism(tmp_path, criterion):
    t0 = time.perf_counter()
    base = ["preset", "scenario-3", "--seed", str(SEED), "--trials", str(TRIALS)]
    assert main(base + ["--workers", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--workers", "4", "--out", str(tmp_path / "b")]) == 0
    elapsed = time.perf_counter() - t0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in csvs)
    ok = same and len(csvs) >= 3 and read_summary(tmp_path / "a" / "summary.csv") and elapsed < 300
    criterion("C9 determinism", ok, f"{len(csvs)} CSVs identical across 1 and 4 workers {same}, {elapsed:.1f}s")
