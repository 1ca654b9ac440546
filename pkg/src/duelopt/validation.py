"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def check_rng(seed_or_rng) -> np.random.Generator:
    """Return a PCG64-backed Generator from a seed, SeedSequence, or Generator.

    A Generator instance is passed through unchanged so callers can share a
    single sequentially-advanced stream.
    """
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    if seed_or_rng is None:
        raise ValueError("rng seed must not be None; pass an integer seed or a Generator")
    return np.random.Generator(np.random.PCG64(seed_or_rng))


def check_index(i: int, size: int, name: str = "arm") -> int:
    i = int(i)
    if not 0 <= i < size:
        raise ValueError(f"{name} index {i} out of range for size {size}")
    return i


def check_probability(x: float, name: str, low: float = 0.0, high: float = 1.0) -> float:
    x = float(x)
    if not low <= x <= high:
        raise ValueError(f"{name} must be in [{low}, {high}], got {x}")
    return x


def check_positive(x: float, name: str) -> float:
    x = float(x)
    if not x > 0:
        raise ValueError(f"{name} must be > 0, got {x}")
    return x


def check_round_index(t: int) -> int:
    t = int(t)
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    return t


def check_preference_matrix(mu, tol: float = 1e-9) -> np.ndarray:
    """Validate a K x K preference matrix: mu[i,j] + mu[j,i] == 1, diagonal 0.5."""
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 2 or mu.shape[0] != mu.shape[1]:
        raise ValueError(f"preference matrix must be square, got shape {mu.shape}")
    if mu.shape[0] < 1:
        raise ValueError("preference matrix must have at least one arm")
    if np.any(mu < -tol) or np.any(mu > 1 + tol):
        raise ValueError("preference matrix entries must lie in [0, 1]")
    if np.max(np.abs(mu + mu.T - 1.0)) > tol:
        raise ValueError("preference matrix violates mu[i,j] + mu[j,i] == 1")
    if np.max(np.abs(np.diag(mu) - 0.5)) > tol:
        raise ValueError("preference matrix diagonal must be 0.5")
    return mu
