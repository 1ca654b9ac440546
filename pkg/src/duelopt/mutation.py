"""Pool evolution: breed variants of the leaders, prune the stragglers.

A mutation event selects the top-ranked arms as parents, generates a fixed
number of children (round-robin over parents), admits them with empty
ledger rows, and then removes the lowest-ranked pre-existing arms. Children
and the current leader are exempt from pruning — children carry no evidence
yet and would otherwise be culled immediately.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .judges import (
    EndpointConfig,
    TransportError,
    extract_json_object,
    http_transport,
    render_template,
)
from .ledger import PreferenceLedger
from .records import Pool, PromptRecord
from .validation import check_rng

log = logging.getLogger(__name__)


class MutatorError(Exception):
    """Child generation failed; the event is skipped and the pool unchanged."""


@dataclass
class MutationPolicy:
    period: int = 10
    n_new: int = 10
    n_prune: int = 10
    top_k: int = 3
    eta: float = 0.3
    parent_rank: str = "top"  # "bottom" breeds from the worst arms instead (ablation)

    def __post_init__(self):
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if self.n_new < 1:
            raise ValueError(f"n_new must be >= 1, got {self.n_new}")
        if self.n_prune < 0:
            raise ValueError(f"n_prune must be >= 0, got {self.n_prune}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.parent_rank not in ("top", "bottom"):
            raise ValueError(f"parent_rank must be 'top' or 'bottom', got {self.parent_rank!r}")


@dataclass
class MutationEvent:
    added: list[PromptRecord] = field(default_factory=list)
    removed_ids: list[str] = field(default_factory=list)
    parent_ids: list[str] = field(default_factory=list)
    llm_calls: int = 0
    skipped: bool = False
    reason: str = ""


def _ranked_indices(ledger: PreferenceLedger) -> list[int]:
    """Arms best-first by the Copeland -> Borda -> lowest-index chain."""
    copeland = ledger.copeland_scores()
    borda = ledger.borda_scores()
    return sorted(range(ledger.size), key=lambda i: (-copeland[i], -borda[i], i))


class LatentMutator:
    """Simulation mode: children are bounded latent steps from the parent."""

    def __init__(self, world, eta: float):
        self.world = world
        self.eta = float(eta)

    def make_child(self, parent: PromptRecord, rng) -> tuple[str, list[float] | None]:
        latent = self.world.mutate_latent(parent.arm_id, self.eta, rng)
        return parent.text, list(np.asarray(latent, dtype=float))


class ScriptedMutator:
    """Fixture mode: children come from a fixed text list, cycled."""

    def __init__(self, texts: list[str]):
        if not texts:
            raise ValueError("scripted mutator needs at least one text")
        self.texts = list(texts)
        self._cursor = 0

    def make_child(self, parent: PromptRecord, rng) -> tuple[str, None]:
        text = self.texts[self._cursor % len(self.texts)]
        self._cursor += 1
        return text, None


class LLMMutator:
    """Live mode: rewrite the parent's text via a chat-completions endpoint."""

    def __init__(
        self,
        endpoint: EndpointConfig,
        template: str,
        tips: dict,
        transport=None,
    ):
        if not tips:
            raise ValueError("mutator needs a nonempty tip set")
        self.endpoint = endpoint
        self.template = template
        self.tips = dict(tips)
        self.transport = transport or http_transport(endpoint)
        self.calls = 0

    def make_child(self, parent: PromptRecord, rng) -> tuple[str, None]:
        rng = check_rng(rng)
        tip_keys = sorted(self.tips)
        tip = self.tips[tip_keys[int(rng.integers(len(tip_keys)))]]
        text = llm_mutate(parent.text, self.template, tip, self.transport, self.endpoint.retries, config=self.endpoint)
        self.calls += 1
        return text, None


def llm_mutate(
    parent_text: str,
    template: str,
    tip: str,
    transport,
    retries: int = 2,
    config: EndpointConfig | None = None,
) -> str:
    """One rewrite request; returns the mutated instruction text.

    The response must be a JSON object with a "mutated_prompt" key; anything
    else is retried, then raised as a mutator failure.
    """
    rendered = render_template(template, {"instructions": parent_text, "tip": tip})
    body = {
        "model": config.model if config else "default",
        "messages": [{"role": "user", "content": rendered}],
        "temperature": config.temperature if config else 0.0,
    }
    last_error: Exception | None = None
    for _ in range(retries + 1):
        try:
            reply = transport(body)
            doc = extract_json_object(reply)
            text = doc["mutated_prompt"]
            if not isinstance(text, str) or not text.strip():
                raise ValueError("mutated_prompt must be a nonempty string")
            return text
        except (TransportError, ValueError, KeyError) as exc:
            last_error = exc
    raise MutatorError(f"no usable mutation after {retries + 1} attempts: {last_error}")


def mutation_step(
    pool: Pool,
    ledger: PreferenceLedger,
    policy: MutationPolicy,
    mutator,
    rng,
    t: int,
    world=None,
) -> MutationEvent:
    """Run one scheduled mutation event in place.

    All children are generated before anything is committed, so a mutator
    failure leaves pool, ledger, and world untouched (the event is skipped
    with a warning). Pruning removes the ``n_prune`` lowest-ranked
    pre-existing arms, never the current leader and never this event's
    children.
    """
    rng = check_rng(rng)
    if ledger.size <= policy.n_prune:
        raise ValueError(
            f"pool of {ledger.size} cannot lose {policy.n_prune} arms; need size > n_prune"
        )
    copeland = ledger.copeland_scores()
    borda = ledger.borda_scores()
    ranked = _ranked_indices(ledger)
    if policy.parent_rank == "bottom":
        ranked = ranked[::-1]
    parent_indices = ranked[: policy.top_k]
    parents = [pool.get(ledger.arm_ids[i]) for i in parent_indices]
    best_index = ledger.current_best()

    children: list[tuple[str, list[float] | None, str]] = []
    llm_calls_before = getattr(mutator, "calls", 0)
    try:
        for c in range(policy.n_new):
            parent = parents[c % len(parents)]
            text, latent = mutator.make_child(parent, rng)
            children.append((text, latent, parent.arm_id))
    except MutatorError as exc:
        log.warning("mutation event at round %d skipped: %s", t, exc)
        return MutationEvent(skipped=True, reason=str(exc), parent_ids=[p.arm_id for p in parents])

    event = MutationEvent(
        parent_ids=[p.arm_id for p in parents],
        llm_calls=getattr(mutator, "calls", 0) - llm_calls_before,
    )
    for text, latent, parent_id in children:
        record = pool.admit(text=text, latent=latent, parent=parent_id, born_round=t)
        if world is not None and latent is not None:
            world.register(record.arm_id, np.asarray(latent))
        ledger.expand(record.arm_id)
        event.added.append(record)

    if policy.n_prune > 0:
        preexisting = [i for i in ranked if i != best_index]
        doomed = sorted(preexisting, key=lambda i: (copeland[i], borda[i], -i))[: policy.n_prune]
        for i in doomed:
            arm_id = ledger.arm_ids[i]
            pool.retire(arm_id, t)
            event.removed_ids.append(arm_id)
        ledger.remove(set(doomed))
    return event
