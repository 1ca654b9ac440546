"""Pairwise win/count bookkeeping and the statistics derived from it.

The ledger holds two K x K matrices: ``wins`` (real-valued win mass, since
margin-discounted and tie updates add fractional mass) and ``counts`` (duel
mass, symmetric). Every sampler and stopping rule reads the ledger through
the derived quantities computed here: empirical win rates, preference gaps,
confidence bounds, Copeland and Borda scores.

Conventions:
  * unseen pairs have an empirical win rate of exactly 0.5 and a preference
    gap of 0.5 (the "we don't know yet" default);
  * Copeland counting uses strict > 0.5, so unseen pairs never count as wins;
  * confidence bounds are not clamped to [0, 1] -- every downstream use is a
    threshold comparison against 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import check_index, check_positive, check_probability, check_round_index


@dataclass
class PairStats:
    """Derived statistics for one ordered pair at round t."""

    mu_hat: float
    gap: float
    upper: float
    lower: float
    n: float


@dataclass
class PreferenceLedger:
    """Win-mass and duel-mass matrices over the active arms.

    Mutation is serialized (one writer); concurrent readers should work from
    a ``copy()``. All updates preserve wins[i,j] + wins[j,i] == counts[i,j]
    exactly, because every recorded event adds total mass 1.
    """

    arm_ids: list[str]
    wins: np.ndarray = field(default=None)  # type: ignore[assignment]
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        k = len(self.arm_ids)
        if self.wins is None:
            self.wins = np.zeros((k, k))
        else:
            self.wins = np.asarray(self.wins, dtype=float)
        if self.counts is None:
            self.counts = np.zeros((k, k))
        else:
            self.counts = np.asarray(self.counts, dtype=float)
        if self.wins.shape != (k, k) or self.counts.shape != (k, k):
            raise ValueError("wins/counts shape must match the number of arm ids")

    @property
    def size(self) -> int:
        return len(self.arm_ids)

    def copy(self) -> "PreferenceLedger":
        return PreferenceLedger(list(self.arm_ids), self.wins.copy(), self.counts.copy())

    def index_of(self, arm_id: str) -> int:
        try:
            return self.arm_ids.index(arm_id)
        except ValueError:
            raise ValueError(f"unknown arm id {arm_id!r}") from None

    # -- updates ----------------------------------------------------------

    def record_duel(self, winner: int, loser: int, gamma: float = 0.5) -> "PreferenceLedger":
        """Fold one judged comparison: winner gets 0.5+gamma, loser 0.5-gamma.

        gamma=0.5 is the plain unit-win update; gamma=0 is a pure tie split.
        """
        winner = check_index(winner, self.size, "winner")
        loser = check_index(loser, self.size, "loser")
        if winner == loser:
            raise ValueError("winner and loser must differ")
        check_probability(gamma, "gamma", 0.0, 0.5)
        self.wins[winner, loser] += 0.5 + gamma
        self.wins[loser, winner] += 0.5 - gamma
        self.counts[winner, loser] += 1.0
        self.counts[loser, winner] += 1.0
        return self

    def record_tie(self, i: int, j: int) -> "PreferenceLedger":
        """Fold a tie: 0.5 win mass to each direction, one duel of mass."""
        i = check_index(i, self.size, "arm")
        j = check_index(j, self.size, "arm")
        if i == j:
            raise ValueError("tie requires two distinct arms")
        self.wins[i, j] += 0.5
        self.wins[j, i] += 0.5
        self.counts[i, j] += 1.0
        self.counts[j, i] += 1.0
        return self

    # -- derived scalars ---------------------------------------------------

    def pair_stats(self, i: int, j: int, t: int, alpha: float) -> PairStats:
        """Empirical win rate, gap, and confidence bounds for pair (i, j)."""
        i = check_index(i, self.size, "arm")
        j = check_index(j, self.size, "arm")
        if i == j:
            raise ValueError("pair_stats requires two distinct arms")
        t = check_round_index(t)
        check_positive(alpha, "alpha")
        n = float(self.counts[i, j])
        if n > 0:
            mu_hat = float(self.wins[i, j]) / n
            gap = abs(mu_hat - 0.5)
        else:
            mu_hat = 0.5
            gap = 0.5
        bonus = math.sqrt(alpha * math.log(t) / max(1.0, n))
        return PairStats(mu_hat=mu_hat, gap=gap, upper=mu_hat + bonus, lower=mu_hat - bonus, n=n)

    # -- derived matrices (vectorized; the samplers' hot path) -------------

    def mu_hat_matrix(self) -> np.ndarray:
        """K x K empirical win rates with 0.5 defaults; diagonal 0.5."""
        with np.errstate(invalid="ignore", divide="ignore"):
            mu = np.where(self.counts > 0, self.wins / np.where(self.counts > 0, self.counts, 1.0), 0.5)
        np.fill_diagonal(mu, 0.5)
        return mu

    def bound_matrices(self, t: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        """Upper and lower confidence bound matrices at round t."""
        t = check_round_index(t)
        check_positive(alpha, "alpha")
        mu = self.mu_hat_matrix()
        bonus = np.sqrt(alpha * math.log(t) / np.maximum(1.0, self.counts))
        return mu + bonus, mu - bonus

    # -- rankings ----------------------------------------------------------

    def copeland_scores(self) -> np.ndarray:
        """Number of opponents each arm beats strictly (empirical)."""
        mu = self.mu_hat_matrix()
        beats = mu > 0.5
        np.fill_diagonal(beats, False)
        return beats.sum(axis=1).astype(int)

    def borda_scores(self) -> np.ndarray:
        """Average empirical win rate of each arm against the rest."""
        k = self.size
        if k < 2:
            raise ValueError("borda scores need at least 2 arms")
        mu = self.mu_hat_matrix()
        return (mu.sum(axis=1) - 0.5) / (k - 1)

    def current_best(self) -> int:
        """Leader index: max Copeland, ties by Borda, then lowest index."""
        if self.size == 0:
            raise ValueError("empty ledger has no best arm")
        if self.size == 1:
            return 0
        copeland = self.copeland_scores()
        borda = self.borda_scores()
        best = 0
        for i in range(1, self.size):
            if copeland[i] > copeland[best] or (
                copeland[i] == copeland[best] and borda[i] > borda[best] + 1e-12
            ):
                best = i
        return best

    # -- pool resizing -----------------------------------------------------

    def expand(self, new_arm: str) -> "PreferenceLedger":
        """Append one arm with zero row/column; existing entries untouched."""
        if new_arm in self.arm_ids:
            raise ValueError(f"arm id {new_arm!r} already present")
        k = self.size
        wins = np.zeros((k + 1, k + 1))
        counts = np.zeros((k + 1, k + 1))
        wins[:k, :k] = self.wins
        counts[:k, :k] = self.counts
        self.arm_ids.append(new_arm)
        self.wins = wins
        self.counts = counts
        return self

    def remove(self, arms: set[int]) -> "PreferenceLedger":
        """Delete rows/columns for ``arms``; surviving stats are preserved."""
        arms = {check_index(a, self.size, "arm") for a in arms}
        keep = [i for i in range(self.size) if i not in arms]
        if not keep:
            raise ValueError("cannot remove every arm")
        idx = np.array(keep)
        self.wins = self.wins[np.ix_(idx, idx)]
        self.counts = self.counts[np.ix_(idx, idx)]
        self.arm_ids = [self.arm_ids[i] for i in keep]
        return self

    # -- conserved quantities ---------------------------------------------

    def total_duel_mass(self) -> float:
        """Total number of folded judgments (each adds mass 1)."""
        return float(self.counts.sum()) / 2.0

    def arm_duel_mass(self) -> np.ndarray:
        """Per-arm total duel mass across all opponents."""
        return self.counts.sum(axis=1)

    def check_invariants(self, tol: float = 1e-9) -> None:
        if np.max(np.abs(self.wins + self.wins.T - self.counts), initial=0.0) > tol:
            raise AssertionError("wins[i,j] + wins[j,i] != counts[i,j]")
        if np.max(np.abs(self.counts - self.counts.T), initial=0.0) > tol:
            raise AssertionError("counts matrix is not symmetric")
        if np.any(np.diag(self.wins) != 0) or np.any(np.diag(self.counts) != 0):
            raise AssertionError("diagonal entries must be exactly 0")
        if np.any(self.wins < 0) or np.any(self.counts < 0):
            raise AssertionError("negative mass")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "arm_ids": list(self.arm_ids),
            "wins": self.wins.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PreferenceLedger":
        return cls(list(doc["arm_ids"]), np.array(doc["wins"]), np.array(doc["counts"]))
