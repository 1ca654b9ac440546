"""Behavioral geometry over arms.

Two arms are behaviorally close when they win against the rest of the pool
at similar rates. Distances are L2 over win-rate vectors, dropping the two
coordinates that involve the pair itself so that self-play entries never
contribute. The covering radius over well-sampled arms is the exploration-
completeness signal consumed by the stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ledger import PreferenceLedger
from .validation import check_index, check_positive, check_round_index


@dataclass
class BehavioralVector:
    """One arm's empirical win-rate row plus per-opponent duel mass."""

    index: int
    winrates: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        self.winrates = np.asarray(self.winrates, dtype=float)
        self.support = np.asarray(self.support, dtype=float)
        if self.winrates.shape != self.support.shape:
            raise ValueError("winrates and support must have the same length")


def behavioral_vector(ledger: PreferenceLedger, i: int) -> BehavioralVector:
    i = check_index(i, ledger.size, "arm")
    mu = ledger.mu_hat_matrix()
    return BehavioralVector(index=i, winrates=mu[i], support=ledger.counts[i].copy())


def behavioral_distance(a: BehavioralVector, b: BehavioralVector) -> float:
    """L2 distance between two win-rate rows over shared opponents.

    The coordinates at both arms' own positions are removed from both
    vectors, so d(a, a) == 0 and the measure is symmetric.
    """
    if a.winrates.shape != b.winrates.shape:
        raise ValueError("behavioral vectors must have the same length")
    if a.index == b.index:
        return 0.0
    mask = np.ones(a.winrates.shape[0], dtype=bool)
    mask[[a.index, b.index]] = False
    diff = a.winrates[mask] - b.winrates[mask]
    return float(math.sqrt(float(diff @ diff)))


def low_support_fraction(a: BehavioralVector, b: BehavioralVector) -> float:
    """Fraction of compared coordinates where either arm has zero duel mass.

    A distance computed with more than half its coordinates at the 0.5
    default is low-confidence; callers may gate on this.
    """
    mask = np.ones(a.winrates.shape[0], dtype=bool)
    if a.index != b.index:
        mask[[a.index, b.index]] = False
    else:
        mask[a.index] = False
    if not mask.any():
        return 0.0
    unsupported = (a.support[mask] == 0) | (b.support[mask] == 0)
    return float(unsupported.mean())


def distance_matrix(ledger: PreferenceLedger) -> np.ndarray:
    """Pairwise behavioral distances for the whole pool (symmetric, 0 diag)."""
    k = ledger.size
    mu = ledger.mu_hat_matrix()
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            mask = np.ones(k, dtype=bool)
            mask[[i, j]] = False
            diff = mu[i, mask] - mu[j, mask]
            out[i, j] = out[j, i] = math.sqrt(float(diff @ diff))
    return out


def covering_radius(pool: list[BehavioralVector], cover: list[BehavioralVector]) -> float:
    """max over pool of min over cover of behavioral distance."""
    if not cover:
        raise ValueError("cover must be nonempty")
    if not pool:
        return 0.0
    worst = 0.0
    for p in pool:
        best = min(behavioral_distance(p, q) for q in cover)
        worst = max(worst, best)
    return worst


def zoom_radius(rho0: float, alpha_exp: float, t: int) -> float:
    """Shrinking resolution schedule rho0 * t^(-alpha_exp) for round t >= 1."""
    check_positive(rho0, "rho0")
    check_positive(alpha_exp, "alpha_exp")
    t = check_round_index(t)
    return float(rho0 * t ** (-alpha_exp))


@dataclass
class CoverState:
    """Covering radius vs the zoom schedule at one round boundary."""

    epsilon_t: float
    rho_t: float
    rho0: float
    alpha_exp: float
    n_min: float
    cover_indices: list[int]

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon_t if math.isfinite(self.epsilon_t) else None,
            "zoom_radius": self.rho_t,
            "cover_size": len(self.cover_indices),
        }


def compute_cover_state(
    ledger: PreferenceLedger,
    t: int,
    rho0: float = 1.0,
    alpha_exp: float = 0.5,
    n_min: float = 10.0,
) -> CoverState:
    """Cover = arms with total duel mass >= n_min; radius over the rest.

    An empty cover means nothing is behaviorally resolved yet and reports
    epsilon_t = +inf (so a covering-based stop cannot fire).
    """
    mass = ledger.arm_duel_mass()
    cover_idx = [i for i in range(ledger.size) if mass[i] >= n_min]
    rho = zoom_radius(rho0, alpha_exp, t)
    if not cover_idx:
        return CoverState(math.inf, rho, rho0, alpha_exp, n_min, [])
    vectors = [behavioral_vector(ledger, i) for i in range(ledger.size)]
    eps = covering_radius(vectors, [vectors[i] for i in cover_idx])
    return CoverState(eps, rho, rho0, alpha_exp, n_min, cover_idx)


def redundancy_prune(
    ledger: PreferenceLedger,
    threshold: float,
    protect: set[int] | None = None,
) -> set[int]:
    """Arms to drop because a better-ranked arm behaves the same.

    Greedy scan in descending Copeland order (ties: Borda, then lower
    index): an arm within behavioral distance < threshold of an already-kept
    arm is marked redundant. Protected arms and the current leader are never
    marked.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    protect = set(protect or ())
    if ledger.size > 0:
        protect.add(ledger.current_best())
    if threshold == 0 or ledger.size < 2:
        return set()
    copeland = ledger.copeland_scores()
    borda = ledger.borda_scores()
    order = sorted(range(ledger.size), key=lambda i: (-copeland[i], -borda[i], i))
    dist = distance_matrix(ledger)
    kept: list[int] = []
    removed: set[int] = set()
    for i in order:
        if i in protect:
            kept.append(i)
            continue
        if kept and min(dist[i, k] for k in kept) < threshold:
            removed.add(i)
        else:
            kept.append(i)
    return removed
