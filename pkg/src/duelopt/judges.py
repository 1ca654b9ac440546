"""Judges: turn one scheduled duel into per-input preference outcomes.

All judges share the ticket/outcome contract. A ticket names the pair, the
input batch, and a per-input presentation swap (who is shown as panel A);
an outcome carries one winner-or-tie per input, tagged with the decision
source that determines the ledger discount. The swap is applied on the way
out and inverted on the way back in, so winner attribution is always in arm
terms regardless of display order.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .validation import check_probability, check_rng

log = logging.getLogger(__name__)

SOURCES = ("answer", "reasoning", "label", "simulated", "human")


class JudgeError(Exception):
    """Unrecoverable judge failure (bad ticket, unknown arm, auth)."""


class TransportError(JudgeError):
    """Retryable remote failure."""


class AuthError(JudgeError):
    """Fatal remote failure: credentials rejected."""


class UnknownDuelError(JudgeError):
    """Judgment referenced a duel that is not pending."""


class DuplicateJudgmentError(JudgeError):
    """A second judgment arrived for an already-judged input."""


# -- templates -------------------------------------------------------------

_PLACEHOLDER = re.compile(r"(?<!\{)\{([A-Za-z_][A-Za-z0-9_]*)\}(?!\})")


def render_template(template: str, fields: dict) -> str:
    """Substitute {name} placeholders; unescape {{ }} to literal braces.

    Unknown placeholders are an error (they are template/field typos);
    literal JSON braces in the template body pass through untouched.
    """

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in fields:
            raise KeyError(f"template placeholder {{{name}}} has no value")
        return str(fields[name])

    return _PLACEHOLDER.sub(_sub, template).replace("{{", "{").replace("}}", "}")


def load_template(name: str) -> str:
    return resources.files("duelopt.templates").joinpath(f"{name}.txt").read_text()


def load_tips(name: str) -> dict:
    raw = resources.files("duelopt.templates").joinpath(f"{name}.json").read_text()
    return json.loads(raw)


# -- tickets and outcomes --------------------------------------------------


@dataclass
class DuelPayload:
    """Displayable content for one input of one duel.

    ``shared`` holds input-level fields (question / query / context);
    ``first``/``second`` hold each arm's response fields, keyed by the
    template field name (answer, reasoning, ...).
    """

    shared: dict = field(default_factory=dict)
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)


@dataclass
class DuelTicket:
    duel_id: str
    round: int
    pair: tuple[int, int]
    arm_ids: tuple[str, str]
    batch: list[int]
    swaps: list[bool]
    payloads: list[DuelPayload] | None = None

    def __post_init__(self):
        if not self.batch:
            raise ValueError("ticket batch must be nonempty")
        if self.pair[0] == self.pair[1]:
            raise ValueError("ticket pair must be two distinct arms")
        if len(self.swaps) != len(self.batch):
            raise ValueError("one presentation swap per batch input required")
        if self.payloads is not None and len(self.payloads) != len(self.batch):
            raise ValueError("one payload per batch input required")

    @property
    def size(self) -> int:
        return len(self.batch)

    def arm_for_panel(self, pos: int, panel: str) -> int:
        """Ledger index shown as panel 'A' or 'B' for batch position pos."""
        if panel not in ("A", "B"):
            raise ValueError(f"panel must be 'A' or 'B', got {panel!r}")
        swapped = self.swaps[pos]
        if panel == "A":
            return self.pair[1] if swapped else self.pair[0]
        return self.pair[0] if swapped else self.pair[1]

    def panel_payloads(self, pos: int) -> tuple[dict, dict, dict]:
        """(shared, panel_A_fields, panel_B_fields) for batch position pos."""
        if self.payloads is None:
            raise ValueError("ticket carries no payloads")
        payload = self.payloads[pos]
        if self.swaps[pos]:
            return payload.shared, payload.second, payload.first
        return payload.shared, payload.first, payload.second


@dataclass
class PerInputResult:
    winner: int | None  # ledger index, or None for a tie
    source: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}; expected one of {SOURCES}")


@dataclass
class DuelOutcome:
    duel_id: str
    pair: tuple[int, int]
    per_input: list[PerInputResult]

    @property
    def aggregate(self) -> int | None:
        """Majority winner over per-input wins; tie on equal counts."""
        i, j = self.pair
        wins_i = sum(1 for r in self.per_input if r.winner == i)
        wins_j = sum(1 for r in self.per_input if r.winner == j)
        if wins_i > wins_j:
            return i
        if wins_j > wins_i:
            return j
        return None

    @property
    def dominant_source(self) -> str:
        counts: dict[str, int] = {}
        for r in self.per_input:
            counts[r.source] = counts.get(r.source, 0) + 1
        return max(counts, key=lambda s: (counts[s], -SOURCES.index(s)))


# -- simulation judges -----------------------------------------------------


@dataclass
class JudgeCalibration:
    """Per-input flip model: the judge contradicts ground truth w.p. 1 - accuracy."""

    accuracy: float = 1.0

    def __post_init__(self):
        check_probability(self.accuracy, "accuracy", 0.5, 1.0)


def simulated_judge(
    ticket: DuelTicket, world, calibration: JudgeCalibration, rng
) -> DuelOutcome:
    """Stochastic preference draws from the world's true matrix.

    Per input, arm i wins with probability mu(i, j), then the verdict is
    flipped with probability 1 - accuracy; the effective i-win rate is
    mu * acc + (1 - mu) * (1 - acc).
    """
    rng = check_rng(rng)
    i, j = ticket.pair
    mu = world.mu(ticket.arm_ids[0], ticket.arm_ids[1])
    m = ticket.size
    first_wins = rng.random(m) < mu
    flips = rng.random(m) < (1.0 - calibration.accuracy)
    results = [
        PerInputResult(i if (win != flip) else j, "simulated")
        for win, flip in zip(first_wins, flips)
    ]
    return DuelOutcome(ticket.duel_id, ticket.pair, results)


def oracle_judge(ticket: DuelTicket, world) -> DuelOutcome:
    """Noise-free judge: the arm with higher true utility wins every input."""
    i, j = ticket.pair
    u_i = world.utility(ticket.arm_ids[0])
    u_j = world.utility(ticket.arm_ids[1])
    if u_i > u_j:
        winner = i
    elif u_j > u_i:
        winner = j
    else:
        winner = None
    results = [PerInputResult(winner, "simulated") for _ in range(ticket.size)]
    return DuelOutcome(ticket.duel_id, ticket.pair, results)


# -- partial labels --------------------------------------------------------


@dataclass
class DictLabelSet:
    """Explicit labels: input id -> {arm_id: correct}."""

    labels: dict

    def is_labeled(self, input_id: int) -> bool:
        return input_id in self.labels

    def correct(self, input_id: int, arm_id: str) -> bool:
        per_arm = self.labels.get(input_id)
        if per_arm is None or arm_id not in per_arm:
            raise JudgeError(f"no label for input {input_id} arm {arm_id!r}")
        return bool(per_arm[arm_id])


@dataclass
class WorldLabelSet:
    """Labels derived from the world: the first floor(r * n_inputs) inputs."""

    world: object
    fraction: float

    def __post_init__(self):
        check_probability(self.fraction, "labeled fraction")
        self._cutoff = int(self.fraction * self.world.n_inputs + 1e-9)

    def is_labeled(self, input_id: int) -> bool:
        return input_id < self._cutoff

    def correct(self, input_id: int, arm_id: str) -> bool:
        return self.world.label_correct(input_id, arm_id)


def partial_label_outcome(ticket: DuelTicket, inner_judge, label_set) -> DuelOutcome:
    """Resolve labeled inputs from ground truth; delegate the rest.

    On a labeled input: one arm correct and the other wrong decides the
    winner outright (source=label); both-correct or both-wrong is a tie
    (source=label, folding as the symmetric half-win update). Unlabeled
    inputs go to the inner judge unchanged.
    """
    i, j = ticket.pair
    id_i, id_j = ticket.arm_ids
    results: list[PerInputResult | None] = [None] * ticket.size
    open_positions = []
    for pos, input_id in enumerate(ticket.batch):
        if not label_set.is_labeled(input_id):
            open_positions.append(pos)
            continue
        ok_i = label_set.correct(input_id, id_i)
        ok_j = label_set.correct(input_id, id_j)
        if ok_i and not ok_j:
            results[pos] = PerInputResult(i, "label")
        elif ok_j and not ok_i:
            results[pos] = PerInputResult(j, "label")
        else:
            results[pos] = PerInputResult(None, "label")
    if open_positions:
        sub = DuelTicket(
            duel_id=ticket.duel_id,
            round=ticket.round,
            pair=ticket.pair,
            arm_ids=ticket.arm_ids,
            batch=[ticket.batch[p] for p in open_positions],
            swaps=[ticket.swaps[p] for p in open_positions],
            payloads=[ticket.payloads[p] for p in open_positions] if ticket.payloads else None,
        )
        inner = inner_judge(sub)
        for p, res in zip(open_positions, inner.per_input):
            results[p] = res
    return DuelOutcome(ticket.duel_id, ticket.pair, results)  # type: ignore[arg-type]


# -- remote LLM judge ------------------------------------------------------


@dataclass
class EndpointConfig:
    url: str
    model: str
    temperature: float = 0.0
    timeout: float = 30.0
    retries: int = 2
    api_key_env: str = "LLM_API_KEY"


def http_transport(endpoint: EndpointConfig):
    """Chat-completions POST; returns the assistant message text."""
    import os

    import requests

    def transport(body: dict) -> str:
        headers = {}
        key = os.environ.get(endpoint.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = requests.post(endpoint.url, json=body, headers=headers, timeout=endpoint.timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed completion body: {exc}") from exc

    return transport


_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)


def extract_json_object(text: str) -> dict:
    """First JSON object in a possibly fenced / chatty response."""
    fenced = re.search(r"```(?:json)?\s*(.*?)```", text, re.DOTALL)
    if fenced:
        text = fenced.group(1)
    match = _JSON_BLOCK.search(text)
    if not match:
        raise ValueError("no JSON object in response")
    return json.loads(match.group(0))


def remote_llm_judge(
    ticket: DuelTicket,
    endpoint: EndpointConfig,
    template: str,
    transport=None,
    select_template=None,
) -> DuelOutcome:
    """Pairwise preference via a chat-completions endpoint, one call per input.

    The template is rendered with the panel-A arm as X and panel-B as Y, so
    the model never sees a stable arm position; the returned "winner" ("X" or
    "Y") is mapped back through the swap. Malformed responses and transport
    hiccups are retried up to endpoint.retries times, then degrade to a tie.
    ``select_template`` may override (template, source) per input, e.g. to
    route same-answer pairs to a reasoning-quality template.
    """
    if ticket.payloads is None:
        raise JudgeError("remote judging requires ticket payloads")
    if transport is None:
        transport = http_transport(endpoint)

    results = []
    for pos in range(ticket.size):
        tmpl, source = template, "answer"
        if select_template is not None:
            tmpl, source = select_template(ticket, pos)
        shared, side_a, side_b = ticket.panel_payloads(pos)
        fields = dict(shared)
        fields.update({f"{k}_X": v for k, v in side_a.items()})
        fields.update({f"{k}_Y": v for k, v in side_b.items()})
        body = {
            "model": endpoint.model,
            "messages": [{"role": "user", "content": render_template(tmpl, fields)}],
            "temperature": endpoint.temperature,
        }
        winner = None
        for attempt in range(endpoint.retries + 1):
            try:
                reply = transport(body)
                verdict = extract_json_object(reply)["winner"].strip().upper()
                if verdict not in ("X", "Y"):
                    raise ValueError(f"winner must be X or Y, got {verdict!r}")
            except AuthError:
                raise
            except (TransportError, ValueError, KeyError, AttributeError) as exc:
                if attempt == endpoint.retries:
                    log.warning(
                        "duel %s input %d: unusable judge response after %d attempts (%s); recording tie",
                        ticket.duel_id, pos, attempt + 1, exc,
                    )
                    winner = None
                    break
                continue
            panel = "A" if verdict == "X" else "B"
            winner = ticket.arm_for_panel(pos, panel)
            break
        results.append(PerInputResult(winner, source))
    return DuelOutcome(ticket.duel_id, ticket.pair, results)


# -- human judge queue -----------------------------------------------------


def _panel_text(fields: dict) -> str:
    """Displayable text from a payload side: distinct non-empty values, in order."""
    seen = []
    for value in fields.values():
        text = str(value).strip()
        if text and text not in seen:
            seen.append(text)
    return "\n".join(seen)


class HumanJudgeQueue:
    """Holds tickets awaiting human judgments; releases complete outcomes.

    Mutation is serialized by the caller (one writer); judgments arrive as
    panel choices and are mapped back to arms through each input's swap.
    """

    def __init__(self):
        self._pending: dict[str, dict] = {}
        self._order: list[str] = []

    def enqueue(self, ticket: DuelTicket) -> None:
        if ticket.duel_id in self._pending:
            raise ValueError(f"duel {ticket.duel_id!r} already pending")
        self._pending[ticket.duel_id] = {
            "ticket": ticket,
            "results": [None] * ticket.size,
        }
        self._order.append(ticket.duel_id)

    def pending_items(self) -> list[dict]:
        """Unjudged (duel, input) items in enqueue order, blind payloads."""
        items = []
        for duel_id in self._order:
            entry = self._pending[duel_id]
            ticket: DuelTicket = entry["ticket"]
            for pos in range(ticket.size):
                if entry["results"][pos] is not None:
                    continue
                if ticket.payloads is not None:
                    shared, side_a, side_b = ticket.panel_payloads(pos)
                    item = {
                        "input": _panel_text(shared),
                        "a": _panel_text(side_a),
                        "b": _panel_text(side_b),
                    }
                else:
                    item = {"input": f"input #{ticket.batch[pos]}", "a": "", "b": ""}
                item.update({"duel_id": duel_id, "input_idx": pos, "round": ticket.round})
                items.append(item)
        return items

    def next_item(self) -> dict | None:
        items = self.pending_items()
        return items[0] if items else None

    def submit(self, duel_id: str, input_idx: int, choice: str) -> DuelOutcome | None:
        """Record one judgment; return the outcome once the ticket is full."""
        entry = self._pending.get(duel_id)
        if entry is None:
            raise UnknownDuelError(f"no pending duel {duel_id!r}")
        ticket: DuelTicket = entry["ticket"]
        if not isinstance(input_idx, int) or not 0 <= input_idx < ticket.size:
            raise JudgeError(f"input_idx {input_idx!r} out of range for duel {duel_id!r}")
        if choice not in ("A", "B", "tie"):
            raise JudgeError(f"choice must be 'A', 'B', or 'tie', got {choice!r}")
        if entry["results"][input_idx] is not None:
            raise DuplicateJudgmentError(f"input {input_idx} of duel {duel_id!r} already judged")
        if choice == "tie":
            winner = None
        else:
            winner = ticket.arm_for_panel(input_idx, choice)
        entry["results"][input_idx] = PerInputResult(winner, "human")
        if all(r is not None for r in entry["results"]):
            del self._pending[duel_id]
            self._order.remove(duel_id)
            return DuelOutcome(duel_id, ticket.pair, entry["results"])
        return None

    @property
    def pending_count(self) -> int:
        return len(self._pending)


# -- aggregate oracle (test support) --------------------------------------


def majority_win_probability(mu: float, m: int) -> float:
    """P(arm i wins the majority of m independent Bernoulli(mu) inputs).

    Ties (even split) count as neither side winning; exact binomial sum.
    """
    from math import comb

    need = m // 2 + 1
    return float(sum(comb(m, k) * mu**k * (1 - mu) ** (m - k) for k in range(need, m + 1)))
