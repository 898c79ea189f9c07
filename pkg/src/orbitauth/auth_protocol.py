"""Challenge-response verifier and Monte Carlo detection-error estimation.

Per-episode randomness comes from ``numpy.random.SeedSequence`` keyed by
``(N, role, trial)`` under the master seed, with separate child streams for
timestamp selection and for measurement noise. Results therefore do not depend
on how trials are split across workers, and two scenarios run with the same
master seed see the same noise (common random numbers).
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import RTT, AdversaryState, response_table, trudy_response
from .ccm import Ccm, ConfigurationError, lookup
from .observables import FEATURES, Measurement, NoiseModel, add_noise, perturb

LEGITIMATE, ATTACK = 0, 1
CHUNK = 1000

ELEVATION = FEATURES.index("elevation")
AZIMUTH = FEATURES.index("azimuth")
RSP = FEATURES.index("rsp")


class PolicyKind(str, enum.Enum):
    FIXED_CONSECUTIVE = "fixed"
    UNIFORM_RANDOM = "random"


class Decision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class SamplingPolicy:
    kind: PolicyKind = PolicyKind.FIXED_CONSECUTIVE
    start_slot: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.start_slot < 0:
            raise ConfigurationError("start_slot must be non-negative")


@dataclass(frozen=True)
class Challenge:
    slot_indices: tuple[int, ...]
    nonce: int

    def __post_init__(self):
        idx = self.slot_indices
        if len(idx) < 1:
            raise ConfigurationError("a challenge needs at least one timestamp")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ConfigurationError("challenge slots must be strictly increasing")


@dataclass(frozen=True)
class FeatureSet:
    use_doppler: bool = True
    use_elevation: bool = True
    use_azimuth: bool = False
    use_rsp: bool = False
    use_rtt: bool = False

    def __post_init__(self):
        if not self.mask().any():
            raise ConfigurationError("at least one feature must be enabled")

    def mask(self) -> np.ndarray:
        return np.array([getattr(self, f"use_{name}") for name in FEATURES])

    def __len__(self) -> int:
        return int(self.mask().sum())


@dataclass(frozen=True, eq=False)
class DepResult:
    n_challenges: int
    thresholds: np.ndarray
    p_fa: np.ndarray
    p_md: np.ndarray
    min_dep: float
    # one flag per attack episode: some challenged slot had Trudy's RTT above the reference
    causality: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def dep(self) -> np.ndarray:
        return 0.5 * (self.p_fa + self.p_md)

    @property
    def causality_rate(self) -> float:
        return float(self.causality.mean()) if self.causality.size else 0.0


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully materialized experiment: reference map, adversary and verifier settings."""

    ccm: Ccm
    adversary: AdversaryState
    noise: NoiseModel
    features: FeatureSet
    policy: SamplingPolicy


def select_timestamps(policy: SamplingPolicy, grid_size: int, n: int, rng: np.random.Generator) -> Challenge:
    if not 1 <= n <= grid_size:
        raise ConfigurationError(f"N={n} challenges do not fit a grid of {grid_size} slots")
    if policy.kind is PolicyKind.FIXED_CONSECUTIVE:
        if policy.start_slot + n > grid_size:
            raise ConfigurationError(
                f"fixed policy from slot {policy.start_slot} with N={n} overruns {grid_size} slots"
            )
        slots = tuple(range(policy.start_slot, policy.start_slot + n))
    else:
        slots = tuple(int(k) for k in np.sort(rng.choice(grid_size, size=n, replace=False)))
    nonce = int(rng.integers(0, 2**64, dtype=np.uint64))
    return Challenge(slots, nonce)


def wrap_pi(angle):
    """Wrap to (-pi, pi]."""
    return math.pi - np.mod(math.pi - angle, 2.0 * math.pi)


def residuals(measured: np.ndarray, reference: np.ndarray) -> np.ndarray:
    d = measured - reference
    d[..., ELEVATION] = wrap_pi(d[..., ELEVATION])
    d[..., AZIMUTH] = wrap_pi(d[..., AZIMUTH])
    d[..., RSP] = 10.0 * np.log10(measured[..., RSP] / reference[..., RSP])
    return d


def _check_sigmas(features: FeatureSet, noise: NoiseModel) -> np.ndarray:
    sig = noise.sigmas()
    mask = features.mask()
    bad = [name for name, on, s in zip(FEATURES, mask, sig) if on and not s > 0]
    if bad:
        raise ConfigurationError(f"enabled feature(s) {bad} need a positive noise sigma")
    return sig


def statistic_array(measured: np.ndarray, reference: np.ndarray, features: FeatureSet, noise: NoiseModel) -> np.ndarray:
    """Noise-normalized squared residual summed over slots and enabled features.

    ``measured``/``reference`` are ``(..., N, 5)``; the result drops the last two axes.
    """
    sig = _check_sigmas(features, noise)
    mask = features.mask()
    d =residuals(measured, reference)[..., mask] / sig[mask]
    return np.sum(d * d, axis=(-2, -1))


def test_statistic(
    measurements: list[Measurement],
    ccm: Ccm,
    challenge: Challenge,
    features: FeatureSet,
    noise: NoiseModel,
) -> float:
    if len(measurements) != len(challenge.slot_indices):
        raise ConfigurationError("measurements must align one-to-one with challenged slots")
    measured = np.array([m.as_array() for m in measurements])
    reference = np.array([lookup(ccm, k).as_array() for k in challenge.slot_indices])
    return float(statistic_array(measured, reference, features, noise))


test_statistic.__test__ = False  # not a pytest test despite the name


def decide(statistic: float, threshold: float) -> Decision:
    return Decision.ACCEPT if statistic <= threshold else Decision.REJECT


def episode_rngs(master_seed: int, n: int, role: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(challenge stream, noise stream) for one episode."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(n, role, trial))
    challenge_seq, noise_seq = seq.spawn(2)
    return np.random.default_rng(challenge_seq), np.random.default_rng(noise_seq)


def run_episode(scenario: Scenario, n: int, master_seed: int, role: int, trial: int) -> tuple[float, Challenge]:
    """One protocol round through the object-level API (slow path, used for cross-checks)."""
    ccm = scenario.ccm
    c_rng, m_rng = episode_rngs(master_seed, n, role, trial)
    challenge = select_timestamps(scenario.policy, len(ccm), n, c_rng)
    if role == LEGITIMATE:
        responses = [add_noise(lookup(ccm, k), scenario.noise, m_rng) for k in challenge.slot_indices]
    else:
        responses = [trudy_response(scenario.adversary, ccm, k, scenario.noise, m_rng) for k in challenge.slot_indices]
    stat = test_statistic(responses, ccm, challenge, scenario.features, scenario.noise)
    return stat, challenge


def _simulate(job):
    seed, n, role, lo, hi, source, reference, policy, features, noise = job
    m = len(reference)
    slots = np.empty((hi - lo, n), dtype=np.intp)
    draws = np.empty((hi - lo, n, len(FEATURES)))
    for j, trial in enumerate(range(lo, hi)):
        c_rng, m_rng = episode_rngs(seed, n, role, trial)
        slots[j] = select_timestamps(policy, m, n, c_rng).slot_indices
        draws[j] = m_rng.standard_normal((n, len(FEATURES)))
    measured = perturb(source[slots], draws, noise)
    stats = statistic_array(measured, reference[slots], features, noise)
    causal = np.any(source[slots, RTT] > reference[slots, RTT], axis=1)
    return stats, causal


def simulate_statistics(
    scenario: Scenario, n: int, trials: int, master_seed: int, role: int, workers: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Statistics (and causality flags) of ``trials`` episodes, in trial order."""
    reference = np.asarray(scenario.ccm.table)
    source = reference if role == LEGITIMATE else response_table(scenario.adversary, scenario.ccm)
    jobs = [
        (master_seed, n, role, lo, min(lo + CHUNK, trials), source, reference,
         scenario.policy, scenario.features, scenario.noise)
        for lo in range(0, trials, CHUNK)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate, jobs))
    else:
        parts = [_simulate(job) for job in jobs]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def dep_from_statistics(
    legit: np.ndarray, attack: np.ndarray, n: int = 0, causality: np.ndarray | None = None
) -> DepResult:
    """Sweep the threshold over the pooled statistics.

    Alice is rejected (false alarm) when her statistic exceeds the threshold;
    Trudy is accepted (missed detection) when hers does not.
    """
    legit_sorted = np.sort(legit)
    attack_sorted = np.sort(attack)
    thresholds = np.unique(np.concatenate([legit_sorted, attack_sorted]))
    p_fa = 1.0 - np.searchsorted(legit_sorted, thresholds, side="right") / len(legit_sorted)
    p_md = np.searchsorted(attack_sorted, thresholds, side="right") / len(attack_sorted)
    min_dep = float(np.min(0.5 * (p_fa + p_md)))
    if causality is None:
        causality = np.zeros(len(attack), dtype=bool)
    return DepResult(n, thresholds, p_fa, p_md, min_dep, causality)


def estimate_dep(scenario: Scenario, n: int, trials: int, master_seed: int, workers: int = 1) -> DepResult:
    if trials < 100:
        raise ConfigurationError("at least 100 trials are required")
    m = len(scenario.ccm)
    if not 1 <= n <= m:
        raise ConfigurationError(f"N={n} outside the {m}-slot grid")
    legit, _ = simulate_statistics(scenario, n, trials, master_seed, LEGITIMATE, workers)
    attack, causal = simulate_statistics(scenario, n, trials, master_seed, ATTACK, workers)
    return dep_from_statistics(legit, attack, n, causal)


def dep_versus_n(
    scenario: Scenario, n_values, trials: int, master_seed: int, workers: int = 1
) -> list[DepResult]:
    n_values = list(n_values)
    if not n_values:
        raise ConfigurationError("n_values must be non-empty")
    return [estimate_dep(scenario, n, trials, master_seed, workers) for n in n_values]
