"""Synthetic ground truth for simulation.

Arms live in a latent Euclidean space with a planted optimum; utility falls
off linearly with distance from it, and pairwise preferences follow a
logistic link on the utility difference. That makes the true preference
matrix, the true Copeland/Borda scores, and every regret quantity exactly
computable. An explicit-matrix world is also provided so cyclic
(no-Condorcet) instances are testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import check_positive, check_preference_matrix, check_rng


def logistic(x: float) -> float:
    """Numerically safe 1 / (1 + exp(-x))."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def utility_gap_for_margin(margin: float, tau: float) -> float:
    """Utility gap g such that logistic(g / tau) = 0.5 + margin.

    Worlds built with min_utility_gap g therefore separate the optimum from
    every rival by at least ``margin`` in preference probability.
    """
    if not 0.0 < margin < 0.5:
        raise ValueError(f"margin must be in (0, 0.5), got {margin}")
    check_positive(tau, "tau")
    p = 0.5 + margin
    return tau * math.log(p / (1.0 - p))


@dataclass
class TrueScores:
    """Ground-truth ranking quantities over a set of arms."""

    condorcet: int | None
    copeland: np.ndarray
    borda: np.ndarray


def scores_from_matrix(mu: np.ndarray) -> TrueScores:
    mu = np.asarray(mu, dtype=float)
    k = mu.shape[0]
    beats = mu > 0.5
    np.fill_diagonal(beats, False)
    copeland = beats.sum(axis=1).astype(int)
    if k >= 2:
        borda = (mu.sum(axis=1) - 0.5) / (k - 1)
    else:
        borda = np.full(k, 0.5)
    condorcet_hits = np.flatnonzero(copeland == k - 1) if k >= 2 else np.array([0])
    condorcet = int(condorcet_hits[0]) if condorcet_hits.size else None
    return TrueScores(condorcet=condorcet, copeland=copeland, borda=borda)


class LatentWorld:
    """Distance-to-optimum utilities with a logistic preference link.

    u(p) = u_max - lam * ||p - p_opt||; mu(i, j) = logistic((u_i - u_j)/tau).
    The link's derivative is bounded by 1/4, so |mu(p,q) - mu(p',q)| <=
    (lam / (4 tau)) * ||p - p'|| — the Lipschitz constant exposed as
    ``lipschitz_L``.
    """

    has_utilities = True

    def __init__(
        self,
        latent_dim: int,
        tau: float,
        lam: float,
        u_max: float,
        p_opt: np.ndarray,
        seed: int,
        n_inputs: int = 200,
    ):
        check_positive(tau, "tau")
        check_positive(lam, "lam")
        self.latent_dim = int(latent_dim)
        self.tau = float(tau)
        self.lam = float(lam)
        self.u_max = float(u_max)
        self.p_opt = np.asarray(p_opt, dtype=float)
        if self.p_opt.shape != (self.latent_dim,):
            raise ValueError("p_opt dimension mismatch")
        self.seed = int(seed)
        self.n_inputs = int(n_inputs)
        self.arms: dict[str, np.ndarray] = {}
        self._arm_seq: dict[str, int] = {}
        self._label_cache: dict[tuple[int, str], bool] = {}

    @property
    def lipschitz_L(self) -> float:
        return self.lam / (4.0 * self.tau)

    def register(self, arm_id: str, latent) -> None:
        if arm_id in self.arms:
            raise ValueError(f"arm id {arm_id!r} already registered")
        latent = np.asarray(latent, dtype=float)
        if latent.shape != (self.latent_dim,):
            raise ValueError(f"latent must have dimension {self.latent_dim}")
        self.arms[arm_id] = latent
        self._arm_seq[arm_id] = len(self._arm_seq)

    def _latent(self, arm_id: str) -> np.ndarray:
        try:
            return self.arms[arm_id]
        except KeyError:
            raise ValueError(f"unknown arm id {arm_id!r}") from None

    def utility_of_latent(self, latent) -> float:
        latent = np.asarray(latent, dtype=float)
        return self.u_max - self.lam * float(np.linalg.norm(latent - self.p_opt))

    def utility(self, arm_id: str) -> float:
        return self.utility_of_latent(self._latent(arm_id))

    def mu(self, a: str, b: str) -> float:
        if a == b:
            return 0.5
        return logistic((self.utility(a) - self.utility(b)) / self.tau)

    def true_matrix(self, arm_ids: list[str]) -> np.ndarray:
        u = np.array([self.utility(a) for a in arm_ids])
        diff = (u[:, None] - u[None, :]) / self.tau
        mu = 1.0 / (1.0 + np.exp(-diff))
        np.fill_diagonal(mu, 0.5)
        return mu

    def accuracy(self, arm_id: str) -> float:
        """Per-input correctness rate of an arm, utility clipped to [0, 1]."""
        return float(np.clip(self.utility(arm_id), 0.0, 1.0))

    def label_correct(self, input_id: int, arm_id: str) -> bool:
        """Deterministic per-(input, arm) correctness draw.

        Seeded independently of duel order, so the same arm gives the same
        answer to the same input no matter when (or how often) it is asked.
        """
        key = (int(input_id), arm_id)
        hit = self._label_cache.get(key)
        if hit is None:
            seq = np.random.SeedSequence([self.seed, int(input_id), self._arm_seq[arm_id]])
            draw = np.random.Generator(np.random.PCG64(seq)).random()
            hit = bool(draw < self.accuracy(arm_id))
            self._label_cache[key] = hit
        return hit

    def mutate_latent(self, parent_id: str, eta: float, rng) -> np.ndarray:
        """A latent within distance eta of the parent, uniform in the ball."""
        check_positive(eta, "eta")
        rng = check_rng(rng)
        parent = self._latent(parent_id)
        direction = rng.normal(size=self.latent_dim)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            return parent.copy()
        radius = eta * rng.random() ** (1.0 / self.latent_dim)
        return parent + direction * (radius / norm)


class ExplicitMatrixWorld:
    """Ground truth given directly as a preference matrix.

    Supports cyclic instances with no Condorcet winner. Has no utilities, so
    the oracle judge, label model, and latent mutation are unavailable.
    """

    has_utilities = False

    def __init__(self, mu, n_inputs: int = 200, seed: int = 0):
        self.mu_matrix = check_preference_matrix(mu)
        self.n_inputs = int(n_inputs)
        self.seed = int(seed)
        self.arms: dict[str, int] = {}

    @property
    def capacity(self) -> int:
        return self.mu_matrix.shape[0]

    def register(self, arm_id: str, latent=None) -> None:
        if arm_id in self.arms:
            raise ValueError(f"arm id {arm_id!r} already registered")
        if len(self.arms) >= self.capacity:
            raise ValueError("matrix world is full; cannot register more arms")
        self.arms[arm_id] = len(self.arms)

    def _index(self, arm_id: str) -> int:
        try:
            return self.arms[arm_id]
        except KeyError:
            raise ValueError(f"unknown arm id {arm_id!r}") from None

    def mu(self, a: str, b: str) -> float:
        return float(self.mu_matrix[self._index(a), self._index(b)])

    def true_matrix(self, arm_ids: list[str]) -> np.ndarray:
        idx = np.array([self._index(a) for a in arm_ids])
        return self.mu_matrix[np.ix_(idx, idx)]

    def utility(self, arm_id: str) -> float:
        raise ValueError("matrix world has no utilities")

    def accuracy(self, arm_id: str) -> float:
        raise ValueError("matrix world has no utilities")

    def label_correct(self, input_id: int, arm_id: str) -> bool:
        raise ValueError("matrix world has no label model")

    def mutate_latent(self, parent_id: str, eta: float, rng):
        raise ValueError("matrix world has no latent space")


def true_scores(world, arm_ids: list[str]) -> TrueScores:
    """Ground-truth Condorcet/Copeland/Borda over the given arms."""
    return scores_from_matrix(world.true_matrix(arm_ids))


def build_world(spec: dict):
    """Construct a world from its config mapping.

    Matrix form: {"type": "matrix", "mu": [[...]], "n_inputs", "seed"}.
    Latent form: {"type": "latent", "k", "latent_dim", "tau", "lam", "u_max",
    "spread", "min_utility_gap", "exclusion_radius", "n_inputs", "seed"} —
    returns (world, initial_latents) with arms *not yet registered*; the
    caller admits pool records and registers ids. min_utility_gap separates
    the best arm's utility from every other by at least that amount;
    exclusion_radius keeps every initial arm at least that far from the
    planted optimum.
    """
    spec = dict(spec)
    kind = spec.get("type", "latent")
    if kind == "matrix":
        world = ExplicitMatrixWorld(
            np.asarray(spec["mu"], dtype=float),
            n_inputs=spec.get("n_inputs", 200),
            seed=spec.get("seed", 0),
        )
        return world, [None] * world.capacity
    if kind != "latent":
        raise ValueError(f"unknown world type {kind!r}")

    k = int(spec.get("k", 10))
    if k < 1:
        raise ValueError(f"world needs at least one arm, got k={k}")
    latent_dim = int(spec.get("latent_dim", 4))
    tau = float(spec.get("tau", 0.2))
    lam = float(spec.get("lam", 1.0))
    u_max = float(spec.get("u_max", 0.9))
    spread = float(spec.get("spread", 0.5))
    gap = float(spec.get("min_utility_gap", 0.0))
    exclusion = float(spec.get("exclusion_radius", 0.0))
    seed = int(spec.get("seed", 0))
    n_inputs = int(spec.get("n_inputs", 200))
    check_positive(spread, "spread")
    if gap < 0 or exclusion < 0:
        raise ValueError("min_utility_gap and exclusion_radius must be >= 0")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xD0E1])))
    p_opt = rng.normal(size=latent_dim)
    world = LatentWorld(latent_dim, tau, lam, u_max, p_opt, seed=seed, n_inputs=n_inputs)

    directions = rng.normal(size=(k, latent_dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = np.sort(rng.uniform(exclusion, exclusion + spread, size=k))
    if k >= 2 and gap > 0:
        # Push every non-best radius out so the best arm's utility lead is >= gap.
        radii[1:] = np.maximum(radii[1:], radii[0] + gap / lam)
    order = rng.permutation(k)
    latents = [p_opt + radii[order[i]] * directions[i] for i in range(k)]
    return world, latents
