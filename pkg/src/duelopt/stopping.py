"""Dual-trigger stopping: behavioral coverage plus a PAC certificate.

The covering trigger fires when the covering radius over well-sampled arms
has shrunk below a fixed target; the PAC trigger fires when the current
leader beats every rival with a Hoeffding certificate at level delta. A run
stops at the first round boundary where every *enabled* trigger is
satisfied; with both disabled it uses its full round budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .behavioral import CoverState
from .ledger import PreferenceLedger


def pac_confidence_bound(n: float, delta: float) -> float:
    """Hoeffding deviation c = sqrt(ln(2/delta) / (2n)) for a dueled pair."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if n <= 0:
        raise ValueError(f"duel mass must be > 0, got {n}")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


@dataclass
class StoppingConfig:
    """Which triggers are armed and at what levels."""

    epsilon_target: float = 0.25
    delta: float = 0.05
    cover_trigger: bool = False
    pac_trigger: bool = False
    bonferroni: bool = False

    def __post_init__(self):
        if self.epsilon_target <= 0:
            raise ValueError(f"epsilon_target must be > 0, got {self.epsilon_target}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")


@dataclass
class StoppingStatus:
    """Result of one stopping check, with the PAC holdouts listed."""

    cover_met: bool
    pac_met: bool
    epsilon_t: float
    best: int
    blocking_opponents: list[tuple[int, float | None]] = field(default_factory=list)
    cover_enabled: bool = False
    pac_enabled: bool = False

    @property
    def should_stop(self) -> bool:
        checks = []
        if self.cover_enabled:
            checks.append(self.cover_met)
        if self.pac_enabled:
            checks.append(self.pac_met)
        return bool(checks) and all(checks)

    def to_dict(self) -> dict:
        return {
            "cover": {"enabled": self.cover_enabled, "met": self.cover_met},
            "pac": {"enabled": self.pac_enabled, "met": self.pac_met},
            "epsilon": self.epsilon_t if math.isfinite(self.epsilon_t) else None,
            "best": self.best,
            "blocking": [{"arm": a, "lower_bound": lb} for a, lb in self.blocking_opponents],
            "should_stop": self.should_stop,
        }


def check_stopping(
    ledger: PreferenceLedger,
    cover_state: CoverState,
    config: StoppingConfig,
) -> StoppingStatus:
    """Evaluate both triggers against the current ledger.

    cover_met iff epsilon_t < epsilon_target (strict). pac_met iff for every
    opponent j of the leader p*, mu_hat(p*, j) - c > 0.5 with the pairwise
    Hoeffding radius c at that pair's duel mass; an unseen pair blocks with
    no bound. With ``bonferroni`` set, delta is split across the K-1
    opponents for a family-wise certificate.
    """
    best = ledger.current_best()
    cover_met = cover_state.epsilon_t < config.epsilon_target
    delta = config.delta
    if config.bonferroni and ledger.size > 1:
        delta = delta / (ledger.size - 1)
    blocking: list[tuple[int, float | None]] = []
    for j in range(ledger.size):
        if j == best:
            continue
        n = float(ledger.counts[best, j])
        if n == 0:
            blocking.append((j, None))
            continue
        mu = float(ledger.wins[best, j]) / n
        lower = mu - pac_confidence_bound(n, delta)
        if lower <= 0.5:
            blocking.append((j, lower))
    pac_met = not blocking
    return StoppingStatus(
        cover_met=cover_met,
        pac_met=pac_met,
        epsilon_t=cover_state.epsilon_t,
        best=best,
        blocking_opponents=blocking,
        cover_enabled=config.cover_trigger,
        pac_enabled=config.pac_trigger,
    )
