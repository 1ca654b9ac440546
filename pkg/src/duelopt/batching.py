"""Adaptive duel batch sizing.

The number of judged comparisons folded into a single duel rises
logarithmically with the round index and shrinks quadratically with the
observed preference gap: close races get large batches, one-sided ones get
the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ledger import PairStats
from .validation import check_round_index


@dataclass
class BatchPolicy:
    """How many judged inputs one duel should consume.

    mode "adaptive" applies the gap-driven formula; mode "fixed" always
    returns ``m_fixed``.
    """

    mode: str = "adaptive"
    c_prime: float = 1.0
    m_min: int = 1
    m_max: int = 50
    m_fixed: int = 1

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"batch mode must be 'adaptive' or 'fixed', got {self.mode!r}")
        if self.c_prime <= 0:
            raise ValueError(f"c_prime must be > 0, got {self.c_prime}")
        self.m_min = int(self.m_min)
        self.m_max = int(self.m_max)
        self.m_fixed = int(self.m_fixed)
        if self.m_min < 1:
            raise ValueError(f"m_min must be >= 1, got {self.m_min}")
        if self.m_max < self.m_min:
            raise ValueError(f"m_max must be >= m_min, got {self.m_max} < {self.m_min}")
        if self.m_fixed < 1:
            raise ValueError(f"fixed batch size must be >= 1, got {self.m_fixed}")


def batch_size(policy: BatchPolicy, t: int, gap: float) -> int:
    """Batch size for round t at preference gap ``gap``.

    Adaptive mode: clamp(ceil(c' * ln(t) / gap^2), m_min, m_max). Callers
    must substitute the 0.5 default gap for unseen pairs before calling;
    gap <= 0 is an error here.
    """
    t = check_round_index(t)
    if policy.mode == "fixed":
        return policy.m_fixed
    gap = float(gap)
    if gap <= 0.0:
        raise ValueError(f"gap must be > 0 (apply the 0.5 default first), got {gap}")
    if gap > 0.5:
        raise ValueError(f"gap must be <= 0.5, got {gap}")
    raw = policy.c_prime * math.log(t) / gap**2
    return min(policy.m_max, max(policy.m_min, math.ceil(raw)))


def batch_size_for_pair(policy: BatchPolicy, t: int, stats: PairStats) -> int:
    """Batch size using a ledger pair's current gap.

    A pair whose empirical win rate sits exactly at 0.5 is maximally hard to
    distinguish and gets m_max directly (the formula's limit).
    """
    if policy.mode == "fixed":
        return policy.m_fixed
    if stats.gap <= 0.0:
        return policy.m_max
    return batch_size(policy, t, stats.gap)


def required_samples(gap: float, delta: float) -> int:
    """Duels needed to resolve a pair with gap ``gap`` at confidence 1 - delta.

    Hoeffding: m = ceil(ln(2/delta) / (2 gap^2)). Exposed for diagnostics;
    the adaptive formula above absorbs its constants into c'.
    """
    gap = float(gap)
    if not 0.0 < gap <= 0.5:
        raise ValueError(f"gap must be in (0, 0.5], got {gap}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return math.ceil(math.log(2.0 / delta) / (2.0 * gap**2))
