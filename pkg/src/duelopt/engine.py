"""The outer duel loop: select, batch, judge, fold, mutate, stop.

The engine is steppable: ``next_ticket()`` issues one scheduled duel and
``fold_outcome()`` absorbs its judgments, advancing round bookkeeping,
mutation, and stopping checks at round boundaries. ``run()`` drives the
loop with a synchronous judge; the HTTP session drives it ticket-by-ticket
for human judging. All randomness flows through one seeded generator, so a
run replays bit-identically — including across snapshot/restore.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import evaluation
from .batching import BatchPolicy, batch_size_for_pair
from .behavioral import compute_cover_state, redundancy_prune
from .config import ConfigError, normalize_config
from .judges import (
    AuthError,
    DuelOutcome,
    DuelPayload,
    DuelTicket,
    EndpointConfig,
    JudgeCalibration,
    WorldLabelSet,
    load_template,
    load_tips,
    oracle_judge,
    partial_label_outcome,
    remote_llm_judge,
    simulated_judge,
)
from .ledger import PreferenceLedger
from .mutation import (
    LatentMutator,
    LLMMutator,
    MutationPolicy,
    ScriptedMutator,
    mutation_step,
)
from .records import Pool, PromptRecord
from .samplers import SamplerConfig, make_sampler
from .stopping import StoppingConfig, check_stopping
from .worldmodel import build_world

log = logging.getLogger(__name__)

SNAPSHOT_SCHEMA_VERSION = 1

DUEL_LOG_COLUMNS = (
    "round",
    "duel_id",
    "arm_i",
    "arm_j",
    "input_idx",
    "winner",
    "source",
    "gamma",
    "m_t",
    "epsilon_t",
    "pac_met",
)


class EngineError(RuntimeError):
    pass


class EngineAborted(EngineError):
    """Live judge became unavailable; carries a resumable snapshot."""

    def __init__(self, message: str, snapshot: dict):
        super().__init__(message)
        self.snapshot = snapshot


@dataclass
class CostMeter:
    judge_calls: int = 0
    prediction_calls: int = 0
    mutation_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "judge_calls": self.judge_calls,
            "prediction_calls": self.prediction_calls,
            "mutation_calls": self.mutation_calls,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CostMeter":
        return cls(**doc)


def predicted_call_budget(
    prompts: int, cached_outputs: int, duels: int, labeled_examples: int
) -> dict:
    """Judge-call budgets: dueling vs supervised scoring, as exact products.

    dueling = prompts * (cached_outputs + duels): each prompt pays its output
    cache once plus its share of judged duels. supervised = prompts *
    labeled_examples: every prompt scored on every labeled example.
    """
    for name, value in (
        ("prompts", prompts),
        ("cached_outputs", cached_outputs),
        ("duels", duels),
        ("labeled_examples", labeled_examples),
    ):
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    return {
        "dueling": prompts * (cached_outputs + duels),
        "supervised": prompts * labeled_examples,
    }


@dataclass
class RunResult:
    final_best: PromptRecord
    final_best_index: int
    rounds_completed: int
    stopped_early: bool
    stopping: dict | None
    trace: list[dict]
    duel_log: list[dict]
    cost: CostMeter
    pool: Pool
    ledger: PreferenceLedger
    config: dict

    def result_document(self) -> dict:
        return {
            "config": self.config,
            "final_best": self.final_best.to_dict(),
            "final_best_index": self.final_best_index,
            "rounds_completed": self.rounds_completed,
            "stopped_early": self.stopped_early,
            "stopping": self.stopping,
            "cost": self.cost.to_dict(),
            "pool": self.pool.to_dict(),
            "trace": self.trace,
        }


def write_duel_log(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DUEL_LOG_COLUMNS)
        for row in rows:
            writer.writerow([evaluation._cell(row[col]) for col in DUEL_LOG_COLUMNS])


class Engine:
    """One optimization run, steppable and snapshot-serializable."""

    def __init__(self, config: dict, transport=None, snapshot: dict | None = None):
        self.config = normalize_config(config)
        self.transport = transport
        self.rounds = self.config["rounds"]
        self.duels_per_round = self.config["duels_per_round"]
        self.alpha = self.config["sampler"]["alpha"]
        self.gamma_by_source = self.config["gamma_by_source"]
        self.fold = self.config["fold"]
        self.batch_policy = BatchPolicy(
            mode=self.config["batch"]["mode"],
            c_prime=self.config["batch"]["c_prime"],
            m_min=self.config["batch"]["m_min"],
            m_max=self.config["batch"]["m_max"],
            m_fixed=self.config["batch"]["m"],
        )
        self.stopping_config = StoppingConfig(
            epsilon_target=self.config["stopping"]["epsilon_target"],
            delta=self.config["stopping"]["delta"],
            cover_trigger=self.config["stopping"]["cover_trigger"],
            pac_trigger=self.config["stopping"]["pac_trigger"],
            bonferroni=self.config["stopping"]["bonferroni"],
        )
        self.behavioral_cfg = self.config["behavioral"]
        self.sampler = make_sampler(
            SamplerConfig(kind=self.config["sampler"]["kind"], alpha=self.alpha)
        )
        self.rng = np.random.Generator(np.random.PCG64(self.config["seed"]))

        self._inflight: tuple[DuelTicket, object] | None = None
        self._round_rows: list[dict] = []
        self._round_regrets: list[float] = []
        self._cumulative_regret = 0.0
        self.trace: list[dict] = []
        self.duel_log: list[dict] = []
        self.cost = CostMeter()
        self.t = 1
        self.duel_in_round = 0
        self.duel_counter = 0
        self.stopped = False
        self.stopping_status: dict | None = None

        if snapshot is None:
            self._build_fresh()
        else:
            self._restore(snapshot)
        self.truth = evaluation.GroundTruth(self.world) if self.world is not None else None
        self.judge = self._build_judge()
        self.mutator, self.mutation_policy = self._build_mutator()

    # -- construction ------------------------------------------------------

    def _build_fresh(self) -> None:
        world_cfg = self.config["world"]
        self.pool = Pool()
        if world_cfg["type"] == "live":
            self.world = None
            for text in world_cfg["prompts"]:
                self.pool.admit(text=text, born_round=0)
            self.n_inputs = len(world_cfg["inputs"])
        else:
            self.world, latents = build_world(world_cfg)
            for latent in latents:
                record = self.pool.admit(
                    text="",
                    latent=list(np.asarray(latent, dtype=float)) if latent is not None else None,
                    born_round=0,
                )
                self.world.register(record.arm_id, np.asarray(latent) if latent is not None else None)
            self.n_inputs = self.world.n_inputs
        active = [r.arm_id for r in self.pool.active_records()]
        if len(active) < 2:
            raise ConfigError("world: need at least 2 arms to duel")
        self.ledger = PreferenceLedger(active)
        self.cost.prediction_calls += self.config["cost"]["b_per_prompt"] * len(active)

    def _restore(self, doc: dict) -> None:
        if doc.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
            raise EngineError(
                f"snapshot schema {doc.get('schema_version')!r} does not match "
                f"{SNAPSHOT_SCHEMA_VERSION}"
            )
        self.pool = Pool.from_dict(doc["pool"])
        self.ledger = PreferenceLedger.from_dict(doc["ledger"])
        world_cfg = self.config["world"]
        if world_cfg["type"] == "live":
            self.world = None
            self.n_inputs = len(world_cfg["inputs"])
        else:
            self.world, _ = build_world(world_cfg)
            for record in self.pool.records:
                self.world.register(
                    record.arm_id,
                    np.asarray(record.latent) if record.latent is not None else None,
                )
            self.n_inputs = self.world.n_inputs
        self.cost = CostMeter.from_dict(doc["cost"])
        self.t = doc["t"]
        self.duel_in_round = doc["duel_in_round"]
        self.duel_counter = doc["duel_counter"]
        self.stopped = doc["stopped"]
        self.stopping_status = doc["stopping"]
        self.trace = list(doc["trace"])
        self.duel_log = list(doc["duel_log"])
        self._round_rows = list(doc["round_rows"])
        self._round_regrets = list(doc["round_regrets"])
        self._cumulative_regret = doc["cumulative_regret"]
        self.rng.bit_generator.state = doc["rng_state"]

    def _build_judge(self):
        jc = self.config["judge"]
        kind = jc["type"]
        if kind in ("simulated", "oracle") and self.world is None:
            raise ConfigError(f"judge.type: {kind!r} judge requires a simulated world")
        if kind == "simulated":
            calibration = JudgeCalibration(jc["accuracy"])
            base = lambda ticket: simulated_judge(ticket, self.world, calibration, self.rng)
        elif kind == "oracle":
            base = lambda ticket: oracle_judge(ticket, self.world)
        elif kind == "remote":
            endpoint = EndpointConfig(**jc["endpoint"])
            template = load_template(jc["template"])
            transport = self.transport
            base = lambda ticket: remote_llm_judge(ticket, endpoint, template, transport)
        else:  # human: the serve session folds outcomes itself
            base = None
        r = jc["labeled_fraction"]
        if r > 0:
            if self.world is None or not self.world.has_utilities:
                raise ConfigError("judge.labeled_fraction: labels require a latent world")
            if base is None:
                raise ConfigError("judge.labeled_fraction: labels require a synchronous judge")
            label_set = WorldLabelSet(self.world, r)
            inner = base
            return lambda ticket: partial_label_outcome(ticket, inner, label_set)
        return base

    def _build_mutator(self):
        mc = self.config["mutation"]
        policy = MutationPolicy(
            period=mc["period"],
            n_new=mc["n_new"],
            n_prune=mc["n_prune"],
            top_k=mc["top_k"],
            eta=mc["eta"],
            parent_rank=mc["parent_rank"],
        )
        mode = mc["mode"]
        if mode == "none":
            return None, policy
        if mode == "latent":
            if self.world is None or not self.world.has_utilities:
                raise ConfigError("mutation.mode: latent mutation requires a latent world")
            return LatentMutator(self.world, policy.eta), policy
        if mode == "scripted":
            if not mc["scripted_texts"]:
                raise ConfigError("mutation.scripted_texts: scripted mutation needs texts")
            return ScriptedMutator(mc["scripted_texts"]), policy
        endpoint = EndpointConfig(**self.config["judge"]["endpoint"])
        return (
            LLMMutator(endpoint, load_template("mutate"), load_tips("mutation_tips"), self.transport),
            policy,
        )

    # -- stepping ----------------------------------------------------------

    @property
    def needs_payloads(self) -> bool:
        return self.config["judge"]["type"] in ("remote", "human")

    @property
    def has_inflight(self) -> bool:
        return self._inflight is not None

    def done(self) -> bool:
        return self.stopped or self.t > self.rounds

    def _input_text(self, input_id: int) -> str:
        world_cfg = self.config["world"]
        if world_cfg["type"] == "live":
            return world_cfg["inputs"][input_id]
        return f"input #{input_id}"

    def next_ticket(self) -> DuelTicket:
        if self.done():
            raise EngineError("run is complete; no further duels")
        if self._inflight is not None:
            raise EngineError("previous ticket is still unresolved")
        choice = self.sampler(self.ledger, self.t, self.rng)
        stats = self.ledger.pair_stats(choice.first, choice.second, self.t, self.alpha)
        m = batch_size_for_pair(self.batch_policy, self.t, stats)
        inputs = [int(x) for x in self.rng.integers(0, self.n_inputs, size=m)]
        swaps = [bool(x) for x in self.rng.random(m) < 0.5]
        payloads = None
        if self.needs_payloads:
            rec_i = self.pool.get(self.ledger.arm_ids[choice.first])
            rec_j = self.pool.get(self.ledger.arm_ids[choice.second])
            payloads = [
                DuelPayload(
                    shared={
                        "question": self._input_text(input_id),
                        "query": self._input_text(input_id),
                        "context": "",
                    },
                    first={"answer": rec_i.text or "(hidden simulated candidate)", "reasoning": ""},
                    second={"answer": rec_j.text or "(hidden simulated candidate)", "reasoning": ""},
                )
                for input_id in inputs
            ]
        duel_id = f"d{self.duel_counter:06d}"
        self.duel_counter += 1
        ticket = DuelTicket(
            duel_id=duel_id,
            round=self.t,
            pair=(choice.first, choice.second),
            arm_ids=(self.ledger.arm_ids[choice.first], self.ledger.arm_ids[choice.second]),
            batch=inputs,
            swaps=swaps,
            payloads=payloads,
        )
        self._inflight = (ticket, choice)
        return ticket

    def fold_outcome(self, outcome: DuelOutcome) -> None:
        if self._inflight is None:
            raise EngineError("no ticket in flight")
        ticket, _choice = self._inflight
        if outcome.duel_id != ticket.duel_id:
            raise EngineError(
                f"outcome {outcome.duel_id!r} does not match in-flight duel {ticket.duel_id!r}"
            )
        if len(outcome.per_input) != ticket.size:
            raise EngineError("outcome must carry one result per batch input")
        self._inflight = None
        i, j = ticket.pair

        if self.truth is not None:
            self._round_regrets.append(self.truth.copeland_regret(self.ledger.arm_ids, i, j))

        if self.fold == "per_input":
            for res in outcome.per_input:
                gamma = self.gamma_by_source[res.source]
                if res.winner is None:
                    self.ledger.record_tie(i, j)
                elif res.winner == i:
                    self.ledger.record_duel(i, j, gamma)
                else:
                    self.ledger.record_duel(j, i, gamma)
        else:
            winner = outcome.aggregate
            gamma = self.gamma_by_source[outcome.dominant_source]
            if winner is None:
                self.ledger.record_tie(i, j)
            else:
                self.ledger.record_duel(winner, i if winner == j else j, gamma)

        self.cost.judge_calls += ticket.size
        for pos, res in enumerate(outcome.per_input):
            if res.winner is None:
                winner_id = "tie"
            else:
                winner_id = ticket.arm_ids[0] if res.winner == i else ticket.arm_ids[1]
            self._round_rows.append(
                {
                    "round": ticket.round,
                    "duel_id": ticket.duel_id,
                    "arm_i": ticket.arm_ids[0],
                    "arm_j": ticket.arm_ids[1],
                    "input_idx": ticket.batch[pos],
                    "winner": winner_id,
                    "source": res.source,
                    "gamma": self.gamma_by_source[res.source],
                    "m_t": ticket.size,
                }
            )
        self.duel_in_round += 1
        if self.duel_in_round >= self.duels_per_round:
            self._end_round()

    def _end_round(self) -> None:
        t = self.t
        best = self.ledger.current_best()
        if self.truth is not None:
            round_regrets = self._round_regrets
            self._cumulative_regret += float(np.sum(round_regrets))
            trace_row = {
                "t": t,
                "r_t": float(np.mean(round_regrets)) if round_regrets else 0.0,
                "borda_regret": self.truth.borda_regret(self.ledger.arm_ids, best),
                "R_t": self._cumulative_regret,
                "leader_rank": self.truth.leader_rank(self.ledger.arm_ids, best),
            }
        else:
            trace_row = {"t": t, "r_t": None, "borda_regret": None, "R_t": None, "leader_rank": None}
        cover = compute_cover_state(
            self.ledger,
            t,
            rho0=self.behavioral_cfg["rho0"],
            alpha_exp=self.behavioral_cfg["alpha_exp"],
            n_min=self.behavioral_cfg["n_min"],
        )
        status = check_stopping(self.ledger, cover, self.stopping_config)
        trace_row["epsilon_t"] = cover.epsilon_t
        self.trace.append(trace_row)
        self.stopping_status = status.to_dict()

        for row in self._round_rows:
            row["epsilon_t"] = cover.epsilon_t
            row["pac_met"] = status.pac_met
            self.duel_log.append(row)
        self._round_rows = []
        self._round_regrets = []

        if status.should_stop:
            self.stopped = True
        elif (
            self.mutator is not None
            and t % self.mutation_policy.period == 0
            and t < self.rounds
        ):
            self._run_mutation(t)

        self.t += 1
        self.duel_in_round = 0

    def _run_mutation(self, t: int) -> None:
        event = mutation_step(
            self.pool, self.ledger, self.mutation_policy, self.mutator, self.rng, t, world=self.world
        )
        if event.skipped:
            return
        self.cost.mutation_calls += event.llm_calls
        self.cost.prediction_calls += self.config["cost"]["b_per_prompt"] * len(event.added)
        threshold = self.behavioral_cfg["prune_threshold"]
        if threshold > 0 and self.ledger.size > 2:
            fresh = {self.ledger.size - 1 - k for k in range(len(event.added))}
            redundant = redundancy_prune(self.ledger, threshold, protect=fresh)
            allowed = self.ledger.size - 2
            if len(redundant) > allowed:
                redundant = set(sorted(redundant)[:allowed])
            if redundant:
                for idx in sorted(redundant):
                    self.pool.retire(self.ledger.arm_ids[idx], t)
                self.ledger.remove(redundant)

    def force_mutation(self) -> None:
        """Run one mutation event now (control-plane request)."""
        if self._inflight is not None:
            raise EngineError("cannot mutate with a duel in flight")
        if self.mutator is None:
            raise EngineError("mutation is disabled for this run")
        self._run_mutation(self.t)

    # -- whole-run driving -------------------------------------------------

    def run(self) -> RunResult:
        if self.judge is None:
            raise EngineError("human-judged runs must be driven through the serve session")
        while not self.done():
            ticket = self.next_ticket()
            try:
                outcome = self.judge(ticket)
            except AuthError as exc:
                self._inflight = None
                raise EngineAborted(f"judge unavailable: {exc}", self.snapshot()) from exc
            self.fold_outcome(outcome)
        return self.result()

    def result(self) -> RunResult:
        best = self.ledger.current_best()
        return RunResult(
            final_best=self.pool.get(self.ledger.arm_ids[best]),
            final_best_index=best,
            rounds_completed=min(self.t - 1, self.rounds),
            stopped_early=self.stopped,
            stopping=self.stopping_status,
            trace=self.trace,
            duel_log=self.duel_log,
            cost=self.cost,
            pool=self.pool,
            ledger=self.ledger,
            config=self.config,
        )

    # -- snapshots ---------------------------------------------------------

    def snapshot(self) -> dict:
        if self._inflight is not None:
            raise EngineError("cannot snapshot with a duel in flight")
        return {
            "schema_version": SNAPSHOT_SCHEMA_VERSION,
            "config": self.config,
            "t": self.t,
            "duel_in_round": self.duel_in_round,
            "duel_counter": self.duel_counter,
            "stopped": self.stopped,
            "stopping": self.stopping_status,
            "pool": self.pool.to_dict(),
            "ledger": self.ledger.to_dict(),
            "cost": self.cost.to_dict(),
            "trace": self.trace,
            "duel_log": self.duel_log,
            "round_rows": self._round_rows,
            "round_regrets": self._round_regrets,
            "cumulative_regret": self._cumulative_regret,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_snapshot(cls, doc: dict, transport=None) -> "Engine":
        if not isinstance(doc, dict) or "config" not in doc:
            raise EngineError("snapshot missing config")
        return cls(doc["config"], transport=transport, snapshot=doc)


def save_snapshot(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, default=evaluation._json_default)


def load_snapshot(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise EngineError(f"snapshot is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise EngineError("snapshot must be a JSON object")
    return doc
