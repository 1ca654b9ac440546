import json
import math

import numpy as np
import pytest

from duelopt.judges import (
    AuthError,
    DictLabelSet,
    DuelOutcome,
    DuelPayload,
    DuelTicket,
    DuplicateJudgmentError,
    EndpointConfig,
    HumanJudgeQueue,
    JudgeCalibration,
    JudgeError,
    PerInputResult,
    TransportError,
    UnknownDuelError,
    WorldLabelSet,
    extract_json_object,
    load_template,
    load_tips,
    majority_win_probability,
    oracle_judge,
    partial_label_outcome,
    remote_llm_judge,
    render_template,
    simulated_judge,
)
from duelopt.worldmodel import build_world


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def make_ticket(m=1, swaps=None, payloads=None, duel_id="d000000", pair=(0, 1)):
    return DuelTicket(
        duel_id=duel_id,
        round=1,
        pair=pair,
        arm_ids=("p000", "p001"),
        batch=list(range(m)),
        swaps=swaps if swaps is not None else [False] * m,
        payloads=payloads,
    )


def two_arm_world(mu01=0.8):
    # place two latents so that mu(p000, p001) == mu01 exactly
    world, _ = build_world({"type": "matrix", "mu": [[0.5, mu01], [1 - mu01, 0.5]]})
    world.register("p000")
    world.register("p001")
    return world


# -- templates -------------------------------------------------------------


def test_render_template_basic():
    out = render_template("Q: {question} A: {answer_X}", {"question": "hm", "answer_X": "42"})
    assert out == "Q: hm A: 42"


def test_render_template_literal_braces():
    out = render_template('Reply {{"winner": "X"}} for {name}', {"name": "z"})
    assert out == 'Reply {"winner": "X"} for z'


def test_render_template_unknown_placeholder():
    with pytest.raises(KeyError):
        render_template("{mystery}", {"question": "x"})


def test_packaged_templates_render():
    fields = {
        "question": "q", "reasoning_X": "rx", "answer_X": "ax",
        "reasoning_Y": "ry", "answer_Y": "ay",
    }
    for name in ("judge_answer", "judge_reasoning"):
        text = render_template(load_template(name), fields)
        assert '"winner"' in text and "{question}" not in text
    ctx = render_template(
        load_template("judge_context"),
        {"query": "q", "context": "c", "answer_X": "ax", "answer_Y": "ay"},
    )
    assert "ax" in ctx and "ay" in ctx


def test_packaged_tips_load():
    tips = load_tips("mutation_tips")
    assert "minimal" in tips and tips["minimal"].startswith("Make very minimal changes")
    assert len(load_tips("initial_tips")) >= 4


# -- tickets ---------------------------------------------------------------


def test_ticket_validation():
    with pytest.raises(ValueError):
        make_ticket(m=0)
    with pytest.raises(ValueError):
        DuelTicket("d0", 1, (2, 2), ("a", "b"), [0], [False])
    with pytest.raises(ValueError):
        DuelTicket("d0", 1, (0, 1), ("a", "b"), [0, 1], [False])


def test_arm_for_panel_respects_swap():
    ticket = make_ticket(m=2, swaps=[False, True])
    assert ticket.arm_for_panel(0, "A") == 0
    assert ticket.arm_for_panel(0, "B") == 1
    assert ticket.arm_for_panel(1, "A") == 1
    assert ticket.arm_for_panel(1, "B") == 0
    with pytest.raises(ValueError):
        ticket.arm_for_panel(0, "C")


def test_outcome_aggregate_majority():
    res = [PerInputResult(0, "simulated"), PerInputResult(0, "simulated"), PerInputResult(1, "simulated")]
    assert DuelOutcome("d", (0, 1), res).aggregate == 0
    res_tied = [PerInputResult(0, "simulated"), PerInputResult(1, "simulated")]
    assert DuelOutcome("d", (0, 1), res_tied).aggregate is None
    # per-input ties count for neither side
    res_all_tie = [PerInputResult(None, "human")]
    assert DuelOutcome("d", (0, 1), res_all_tie).aggregate is None


def test_dominant_source():
    res = [PerInputResult(0, "label"), PerInputResult(1, "answer"), PerInputResult(0, "label")]
    assert DuelOutcome("d", (0, 1), res).dominant_source == "label"


# -- simulated judges ------------------------------------------------------


def test_simulated_judge_perfect_accuracy_rate():
    world = two_arm_world(0.8)
    ticket = make_ticket(m=20_000)
    outcome = simulated_judge(ticket, world, JudgeCalibration(1.0), rng(0))
    wins_0 = sum(1 for r in outcome.per_input if r.winner == 0)
    assert wins_0 / 20_000 == pytest.approx(0.8, abs=0.01)
    assert all(r.source == "simulated" for r in outcome.per_input)


def test_simulated_judge_flip_model():
    # effective rate mu*acc + (1-mu)*(1-acc): 0.8*0.7 + 0.2*0.3 = 0.62
    world = two_arm_world(0.8)
    ticket = make_ticket(m=20_000)
    outcome = simulated_judge(ticket, world, JudgeCalibration(0.7), rng(1))
    wins_0 = sum(1 for r in outcome.per_input if r.winner == 0)
    assert wins_0 / 20_000 == pytest.approx(0.62, abs=0.01)


def test_simulated_majority_matches_binomial():
    # aggregate win frequency vs the exact binomial majority probability
    for m in (1, 3, 5):
        for mu in (0.6, 0.8):
            world = two_arm_world(mu)
            g = rng(hash((m, mu)) % 2**32)
            wins = 0
            trials = 20_000 // m + 1
            for _ in range(trials):
                outcome = simulated_judge(make_ticket(m=m), world, JudgeCalibration(1.0), g)
                if outcome.aggregate == 0:
                    wins += 1
            expected = majority_win_probability(mu, m)
            assert wins / trials == pytest.approx(expected, abs=0.02)


def test_majority_win_probability_values():
    assert majority_win_probability(0.6, 1) == pytest.approx(0.6)
    # m=3: p^3 + 3 p^2 (1-p) = 0.216 + 0.432 = 0.648
    assert majority_win_probability(0.6, 3) == pytest.approx(0.648)
    # even m: exact splits count as no majority
    assert majority_win_probability(0.5, 2) == pytest.approx(0.25)


def test_oracle_judge_picks_higher_utility():
    world, latents = build_world(
        {"type": "latent", "k": 2, "latent_dim": 3, "tau": 0.2, "lam": 1.0,
         "u_max": 0.9, "spread": 0.5, "seed": 1, "n_inputs": 10}
    )
    world.register("p000", latents[0])
    world.register("p001", latents[1])
    better = 0 if world.utility("p000") > world.utility("p001") else 1
    outcome = oracle_judge(make_ticket(m=3), world)
    assert all(r.winner == better for r in outcome.per_input)


# -- partial labels --------------------------------------------------------


def test_partial_labels_decide_or_tie():
    labels = DictLabelSet({0: {"p000": True, "p001": False},
                           1: {"p000": True, "p001": True}})
    calls = []

    def inner(sub):
        calls.append(list(sub.batch))
        return DuelOutcome(sub.duel_id, sub.pair,
                           [PerInputResult(1, "answer") for _ in sub.batch])

    ticket = make_ticket(m=3)  # inputs 0, 1, 2
    outcome = partial_label_outcome(ticket, inner, labels)
    assert outcome.per_input[0].winner == 0 and outcome.per_input[0].source == "label"
    assert outcome.per_input[1].winner is None and outcome.per_input[1].source == "label"
    assert outcome.per_input[2].winner == 1 and outcome.per_input[2].source == "answer"
    assert calls == [[2]]  # only the unlabeled input reached the inner judge


def test_partial_labels_all_labeled_skips_inner():
    labels = DictLabelSet({i: {"p000": False, "p001": False} for i in range(3)})

    def inner(sub):  # pragma: no cover - must not run
        raise AssertionError("inner judge called for fully labeled batch")

    outcome = partial_label_outcome(make_ticket(m=3), inner, labels)
    assert all(r.source == "label" for r in outcome.per_input)


def test_world_label_set_cutoff():
    world, latents = build_world(
        {"type": "latent", "k": 2, "latent_dim": 2, "tau": 0.2, "lam": 1.0,
         "u_max": 0.9, "spread": 0.5, "seed": 0, "n_inputs": 10}
    )
    labels = WorldLabelSet(world, 0.3)
    assert [labels.is_labeled(i) for i in range(5)] == [True, True, True, False, False]
    assert WorldLabelSet(world, 0.0)._cutoff == 0


# -- remote judge ----------------------------------------------------------


def payload():
    return DuelPayload(
        shared={"question": "why?"},
        first={"answer": "because A", "reasoning": ""},
        second={"answer": "because B", "reasoning": ""},
    )


def remote_ticket(swaps=None, m=1):
    return make_ticket(m=m, swaps=swaps, payloads=[payload() for _ in range(m)])


ENDPOINT = EndpointConfig(url="http://example.invalid/v1", model="judge-1", retries=2)
TEMPLATE = 'Q: {question}\nX: {answer_X}\nY: {answer_Y}\nReply {{"winner": "X" or "Y"}}'


def test_remote_judge_maps_winner_through_swap():
    def transport(body):
        return '{"reasoning": "X better", "winner": "X"}'

    out_plain = remote_llm_judge(remote_ticket(swaps=[False]), ENDPOINT, TEMPLATE, transport)
    assert out_plain.per_input[0].winner == 0
    out_swapped = remote_llm_judge(remote_ticket(swaps=[True]), ENDPOINT, TEMPLATE, transport)
    assert out_swapped.per_input[0].winner == 1


def test_remote_judge_sees_swapped_panels():
    seen = {}

    def transport(body):
        seen["prompt"] = body["messages"][0]["content"]
        return '{"winner": "Y"}'

    remote_llm_judge(remote_ticket(swaps=[True]), ENDPOINT, TEMPLATE, transport)
    # swap=True puts the second arm's answer in panel X
    assert "X: because B" in seen["prompt"]
    assert "Y: because A" in seen["prompt"]


def test_remote_judge_parses_fenced_json():
    def transport(body):
        return 'Sure!\n```json\n{"reasoning": "...", "winner": "Y"}\n```\nthanks'

    out = remote_llm_judge(remote_ticket(), ENDPOINT, TEMPLATE, transport)
    assert out.per_input[0].winner == 1


def test_remote_judge_retries_then_ties():
    attempts = []

    def transport(body):
        attempts.append(1)
        raise TransportError("boom")

    out = remote_llm_judge(remote_ticket(), ENDPOINT, TEMPLATE, transport)
    assert len(attempts) == 3  # initial + 2 retries
    assert out.per_input[0].winner is None


def test_remote_judge_recovers_on_retry():
    replies = iter(["garbage with no json", '{"winner": "X"}'])

    def transport(body):
        return next(replies)

    out = remote_llm_judge(remote_ticket(), ENDPOINT, TEMPLATE, transport)
    assert out.per_input[0].winner == 0


def test_remote_judge_auth_error_fatal():
    def transport(body):
        raise AuthError("401")

    with pytest.raises(AuthError):
        remote_llm_judge(remote_ticket(), ENDPOINT, TEMPLATE, transport)


def test_remote_judge_needs_payloads():
    with pytest.raises(JudgeError):
        remote_llm_judge(make_ticket(), ENDPOINT, TEMPLATE, lambda b: "")


def test_extract_json_object_errors():
    with pytest.raises(ValueError):
        extract_json_object("no braces here")
    assert extract_json_object('x {"a": 1} y') == {"a": 1}


def test_select_template_routes_source():
    def select(ticket, pos):
        return TEMPLATE, "reasoning"

    def transport(body):
        return '{"winner": "X"}'

    out = remote_llm_judge(remote_ticket(), ENDPOINT, TEMPLATE, transport, select_template=select)
    assert out.per_input[0].source == "reasoning"


# -- human queue -----------------------------------------------------------


def test_human_queue_full_cycle():
    q = HumanJudgeQueue()
    ticket = remote_ticket(swaps=[False, True], m=2)
    q.enqueue(ticket)
    assert q.pending_count == 1

    item = q.next_item()
    assert item["duel_id"] == "d000000" and item["input_idx"] == 0
    assert item["a"] == "because A" and item["b"] == "because B"

    assert q.submit("d000000", 0, "A") is None  # still one input open
    swapped_item = q.next_item()
    assert swapped_item["input_idx"] == 1
    assert swapped_item["a"] == "because B"  # swap shows second arm on panel A

    outcome = q.submit("d000000", 1, "A")
    assert outcome is not None
    assert outcome.per_input[0].winner == 0  # panel A unswapped -> arm 0
    assert outcome.per_input[1].winner == 1  # panel A swapped -> arm 1
    assert all(r.source == "human" for r in outcome.per_input)
    assert q.pending_count == 0


def test_human_queue_tie_choice():
    q = HumanJudgeQueue()
    q.enqueue(remote_ticket())
    outcome = q.submit("d000000", 0, "tie")
    assert outcome.per_input[0].winner is None


def test_human_queue_blind_items():
    q = HumanJudgeQueue()
    q.enqueue(remote_ticket())
    item = q.next_item()
    assert "p000" not in json.dumps(item) and "p001" not in json.dumps(item)


def test_human_queue_errors():
    q = HumanJudgeQueue()
    q.enqueue(remote_ticket(m=2, swaps=[False, False]))
    with pytest.raises(UnknownDuelError):
        q.submit("dXXXXXX", 0, "A")
    with pytest.raises(JudgeError):
        q.submit("d000000", 9, "A")
    with pytest.raises(JudgeError):
        q.submit("d000000", 0, "first")
    q.submit("d000000", 0, "B")
    with pytest.raises(DuplicateJudgmentError):
        q.submit("d000000", 0, "A")
    with pytest.raises(ValueError):
        q.enqueue(remote_ticket(m=2, swaps=[False, False]))
