"""Pair selection policies for the duel loop.

Four interchangeable samplers:

* ``dts_copeland`` — two-phase posterior sampling. Phase 1 restricts to the
  arms with the best optimistic Copeland score, then picks the incumbent by
  counting posterior wins; phase 2 picks the challenger by posterior
  sampling among opponents not yet confidently beaten.
* ``dts_borda`` — one aggregate skill posterior per arm; duel the top two.
* ``rucb`` — optimistic incumbent uniform among potential winners,
  challenger with the highest upper bound against it.
* ``random`` — uniform over unordered pairs (baseline).

All are pure functions of (ledger snapshot, round, config, RNG stream) and
replay identically under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ledger import PreferenceLedger
from .validation import check_positive, check_round_index

SAMPLER_KINDS = ("dts_copeland", "dts_borda", "rucb", "random")


@dataclass
class SamplerConfig:
    kind: str = "dts_copeland"
    alpha: float = 1.2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {SAMPLER_KINDS}")
        check_positive(self.alpha, "alpha")


@dataclass
class DuelChoice:
    first: int
    second: int
    rationale: str

    def __post_init__(self):
        if self.first == self.second:
            raise ValueError("a duel needs two distinct arms")


def _require_pairable(ledger: PreferenceLedger) -> int:
    if ledger.size < 2:
        raise ValueError(f"need at least 2 arms to duel, have {ledger.size}")
    return ledger.size


def _choose(rng: np.random.Generator, indices: np.ndarray) -> int:
    """Uniform pick; skips the RNG for singletons."""
    if len(indices) == 1:
        return int(indices[0])
    return int(indices[rng.integers(len(indices))])


def dts_copeland_select(
    ledger: PreferenceLedger, t: int, config: SamplerConfig, rng: np.random.Generator
) -> DuelChoice:
    k = _require_pairable(ledger)
    t = check_round_index(t)
    upper, lower = ledger.bound_matrices(t, config.alpha)

    # Phase 1: optimistic Copeland scores, then posterior win counts among
    # the leaders.
    optimistic = upper >= 0.5
    np.fill_diagonal(optimistic, False)
    zeta = optimistic.sum(axis=1) / (k - 1)
    candidates = np.flatnonzero(zeta == zeta.max())

    theta1 = rng.beta(ledger.wins + 1.0, ledger.wins.T + 1.0)
    posterior_beats = theta1 >= 0.5
    np.fill_diagonal(posterior_beats, False)
    s = posterior_beats.sum(axis=1)
    tied = candidates[s[candidates] == s[candidates].max()]
    first = _choose(rng, tied)

    # Phase 2: posterior sampling among opponents not confidently beaten.
    theta2 = rng.beta(ledger.wins[:, first] + 1.0, ledger.wins[first, :] + 1.0)
    uncertain = lower[first] <= 0.5
    uncertain[first] = False
    scores = np.where(uncertain, theta2, -np.inf)
    if not uncertain.any():
        scores = theta2.copy()
        scores[first] = -np.inf
    second = int(np.argmax(scores))
    return DuelChoice(first, second, "copeland_leader_vs_uncertain")


def dts_borda_select(
    ledger: PreferenceLedger, config: SamplerConfig, rng: np.random.Generator
) -> DuelChoice:
    _require_pairable(ledger)
    wins_for = ledger.wins.sum(axis=1)
    wins_against = ledger.wins.sum(axis=0)
    theta = rng.beta(wins_for + 1.0, wins_against + 1.0)
    first = int(np.argmax(theta))
    theta[first] = -np.inf
    second = int(np.argmax(theta))
    return DuelChoice(first, second, "top2_skill")


def rucb_select(
    ledger: PreferenceLedger, t: int, config: SamplerConfig, rng: np.random.Generator
) -> DuelChoice:
    k = _require_pairable(ledger)
    t = check_round_index(t)
    upper, _ = ledger.bound_matrices(t, config.alpha)
    optimistic = upper >= 0.5
    np.fill_diagonal(optimistic, True)
    champions = np.flatnonzero(optimistic.all(axis=1))
    if champions.size == 0:
        champions = np.arange(k)
    first = _choose(rng, champions)

    against_first = upper[:, first].copy()
    against_first[first] = -np.inf
    tied = np.flatnonzero(against_first == against_first.max())
    second = _choose(rng, tied)
    return DuelChoice(first, second, "ucb_leader_vs_challenger")


def random_select(ledger: PreferenceLedger, rng: np.random.Generator) -> DuelChoice:
    k = _require_pairable(ledger)
    pair = rng.choice(k, size=2, replace=False)
    return DuelChoice(int(pair[0]), int(pair[1]), "uniform")


def make_sampler(config: SamplerConfig):
    """Uniform call shape for the engine: sampler(ledger, t, rng)."""
    if config.kind == "dts_copeland":
        return lambda ledger, t, rng: dts_copeland_select(ledger, t, config, rng)
    if config.kind == "dts_borda":
        return lambda ledger, t, rng: dts_borda_select(ledger, config, rng)
    if config.kind == "rucb":
        return lambda ledger, t, rng: rucb_select(ledger, t, config, rng)
    return lambda ledger, t, rng: random_select(ledger, rng)
