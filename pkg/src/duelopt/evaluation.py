"""Run measurement against ground truth, comparisons, and report export.

Everything here reads a world's true preference structure: per-duel regret
(how far the dueled pair's better arm sits below the true Copeland
optimum), per-round leader quality, and the cross-sampler comparison grid.
Also hosts the duel-log replay used by the `report` verb, which must
reproduce a finished run's trace exactly.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .behavioral import compute_cover_state
from .ledger import PreferenceLedger
from .records import Pool
from .worldmodel import TrueScores, true_scores

TRACE_COLUMNS = ("t", "r_t", "borda_regret", "R_t", "leader_rank", "epsilon_t")
COMPARE_COLUMNS = ("sampler", "seed", "t", "r_t", "R_t", "leader_rank", "epsilon_t")


@dataclass
class TruthBundle:
    """True scores for one active-arm snapshot, with normalized Copeland."""

    scores: TrueScores
    zeta: np.ndarray
    utilities: np.ndarray | None


class GroundTruth:
    """Caches true scores per active-arm composition (pool changes rarely)."""

    def __init__(self, world):
        self.world = world
        self._cache: dict[tuple[str, ...], TruthBundle] = {}

    def bundle(self, arm_ids: list[str]) -> TruthBundle:
        key = tuple(arm_ids)
        hit = self._cache.get(key)
        if hit is None:
            scores = true_scores(self.world, list(arm_ids))
            k = len(arm_ids)
            zeta = scores.copeland / (k - 1) if k >= 2 else np.ones(k)
            utilities = None
            if self.world.has_utilities:
                utilities = np.array([self.world.utility(a) for a in arm_ids])
            hit = TruthBundle(scores, zeta, utilities)
            self._cache[key] = hit
        return hit

    def copeland_regret(self, arm_ids: list[str], first: int, second: int) -> float:
        b = self.bundle(arm_ids)
        return float(b.zeta.max() - max(b.zeta[first], b.zeta[second]))

    def borda_regret(self, arm_ids: list[str], selected: int) -> float:
        b = self.bundle(arm_ids)
        return float(b.scores.borda.max() - b.scores.borda[selected])

    def leader_rank(self, arm_ids: list[str], best: int) -> int:
        """1-based rank of the leader's true quality among the active arms.

        Utility order where the world has utilities; true Borda order for
        matrix worlds (which have no scalar utilities).
        """
        b = self.bundle(arm_ids)
        quality = b.utilities if b.utilities is not None else b.scores.borda
        return int(1 + np.sum(quality > quality[best]))


def copeland_regret(world, arm_ids: list[str], first: int, second: int) -> float:
    return GroundTruth(world).copeland_regret(arm_ids, first, second)


def borda_regret(world, arm_ids: list[str], selected: int) -> float:
    return GroundTruth(world).borda_regret(arm_ids, selected)


def leader_rank(world, arm_ids: list[str], best: int) -> int:
    return GroundTruth(world).leader_rank(arm_ids, best)


# -- exports ---------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return str(value)


def write_trace_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in TRACE_COLUMNS])


def read_trace_csv(path: str) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# -- sampler comparison ----------------------------------------------------


@dataclass
class ComparisonReport:
    rows: list[dict] = field(default_factory=list)  # one per (sampler, seed, round)
    summary: dict = field(default_factory=dict)  # sampler -> per-round mean/std
    configs: dict = field(default_factory=dict)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(COMPARE_COLUMNS)
            for row in self.rows:
                writer.writerow([_cell(row.get(col)) for col in COMPARE_COLUMNS])

    def write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"configs": self.configs, "summary": self.summary, "rows": self.rows},
                fh,
                indent=2,
                default=_json_default,
            )


def _json_default(value):
    if isinstance(value, float) and math.isinf(value):
        return None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    raise TypeError(f"not JSON-serializable: {type(value)}")


def compare_samplers(
    base_config: dict,
    kinds: list[str],
    n_seeds: int,
    seed0: int | None = None,
) -> ComparisonReport:
    """Run each sampler over the same seed range and aggregate the traces.

    Seed s of every sampler shares one world (the world seed follows the run
    seed), so the comparison is paired. Mean and std of each trace field are
    reported per round; std is 0 when n_seeds is 1.
    """
    from .engine import Engine  # runtime import; engine depends on this module

    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    if seed0 is None:
        seed0 = int(base_config.get("seed", 0))
    report = ComparisonReport()
    per_kind: dict[str, dict[int, list[dict]]] = {kind: {} for kind in kinds}
    for kind in kinds:
        cfg = copy.deepcopy(base_config)
        cfg.setdefault("sampler", {})["kind"] = kind
        report.configs[kind] = copy.deepcopy(cfg)
        for s in range(n_seeds):
            run_cfg = copy.deepcopy(cfg)
            run_cfg["seed"] = seed0 + s
            result = Engine(run_cfg).run()
            per_kind[kind][seed0 + s] = result.trace
            for row in result.trace:
                report.rows.append(
                    {
                        "sampler": kind,
                        "seed": seed0 + s,
                        "t": row["t"],
                        "r_t": row.get("r_t"),
                        "R_t": row.get("R_t"),
                        "leader_rank": row.get("leader_rank"),
                        "epsilon_t": row.get("epsilon_t"),
                    }
                )
    for kind in kinds:
        by_round: dict[int, dict[str, list[float]]] = {}
        for trace in per_kind[kind].values():
            for row in trace:
                slot = by_round.setdefault(row["t"], {"r_t": [], "R_t": [], "leader_rank": []})
                for field_name in ("r_t", "R_t", "leader_rank"):
                    if row.get(field_name) is not None:
                        slot[field_name].append(float(row[field_name]))
        report.summary[kind] = {
            t: {
                f: {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
                for f, vals in slots.items()
                if vals
            }
            for t, slots in sorted(by_round.items())
        }
    return report


# -- duel-log replay -------------------------------------------------------


def read_duel_log(path: str) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["round"] = int(row["round"])
        row["input_idx"] = int(row["input_idx"])
        row["gamma"] = float(row["gamma"])
        row["m_t"] = int(row["m_t"])
    return rows


def replay_trace(config: dict, pool: Pool, log_rows: list[dict], world=None) -> list[dict]:
    """Rebuild the per-round trace from a finished run's duel log.

    Walks the log round by round, folding judgments into a fresh ledger and
    applying the pool's recorded births/removals at each boundary — the same
    order the engine used — so the regenerated trace must equal the run's
    own export.
    """
    if world is None:
        world = _world_from_records(config, pool)
    truth = GroundTruth(world) if world is not None else None
    behavioral_cfg = config.get("behavioral", {})
    fold = config.get("fold", "per_input")

    initial = [r for r in pool.records if r.born_round == 0]
    ledger = PreferenceLedger([r.arm_id for r in initial])
    index_of = {r.arm_id: i for i, r in enumerate(initial)}

    by_round: dict[int, list[dict]] = {}
    for row in log_rows:
        by_round.setdefault(row["round"], []).append(row)

    trace: list[dict] = []
    cumulative = 0.0
    last_round = max(by_round) if by_round else 0
    for t in range(1, last_round + 1):
        rows = by_round.get(t, [])
        regrets = []
        seen_duels: dict[str, list[dict]] = {}
        for row in rows:
            seen_duels.setdefault(row["duel_id"], []).append(row)
        for duel_rows in seen_duels.values():
            i = index_of[duel_rows[0]["arm_i"]]
            j = index_of[duel_rows[0]["arm_j"]]
            if truth is not None:
                regrets.append(truth.copeland_regret(ledger.arm_ids, i, j))
            _fold_rows(ledger, index_of, duel_rows, fold)
        cumulative += float(np.sum(regrets))
        best = ledger.current_best()
        cover = compute_cover_state(
            ledger,
            t,
            rho0=behavioral_cfg.get("rho0", 1.0),
            alpha_exp=behavioral_cfg.get("alpha_exp", 0.5),
            n_min=behavioral_cfg.get("n_min", 10),
        )
        row_out = {
            "t": t,
            "r_t": float(np.mean(regrets)) if regrets and truth is not None else None,
            "borda_regret": truth.borda_regret(ledger.arm_ids, best) if truth is not None else None,
            "R_t": cumulative if truth is not None else None,
            "leader_rank": truth.leader_rank(ledger.arm_ids, best) if truth is not None else None,
            "epsilon_t": cover.epsilon_t,
        }
        trace.append(row_out)

        removed = [r.arm_id for r in pool.records if r.removed_round == t]
        if removed:
            ledger.remove({index_of[a] for a in removed})
            index_of = {a: i for i, a in enumerate(ledger.arm_ids)}
        for record in pool.records:
            if record.born_round == t:
                ledger.expand(record.arm_id)
                index_of[record.arm_id] = ledger.size - 1
    return trace


def _fold_rows(ledger: PreferenceLedger, index_of: dict, duel_rows: list[dict], fold: str) -> None:
    i = index_of[duel_rows[0]["arm_i"]]
    j = index_of[duel_rows[0]["arm_j"]]
    if fold == "per_input":
        for row in duel_rows:
            if row["winner"] == "tie":
                ledger.record_tie(i, j)
            else:
                winner = index_of[row["winner"]]
                loser = j if winner == i else i
                ledger.record_duel(winner, loser, row["gamma"])
        return
    wins_i = sum(1 for r in duel_rows if r["winner"] == duel_rows[0]["arm_i"])
    wins_j = sum(1 for r in duel_rows if r["winner"] == duel_rows[0]["arm_j"])
    from .judges import SOURCES

    sources = [r["source"] for r in duel_rows]
    dominant = max(set(sources), key=lambda s: (sources.count(s), -SOURCES.index(s)))
    gamma = next(r["gamma"] for r in duel_rows if r["source"] == dominant)
    if wins_i == wins_j:
        ledger.record_tie(i, j)
    elif wins_i > wins_j:
        ledger.record_duel(i, j, gamma)
    else:
        ledger.record_duel(j, i, gamma)


def _world_from_records(config: dict, pool: Pool):
    from .worldmodel import build_world

    world_cfg = config.get("world", {})
    if world_cfg.get("type", "latent") == "live":
        return None
    world, _ = build_world(world_cfg)
    for record in pool.records:
        world.register(record.arm_id, np.asarray(record.latent) if record.latent is not None else None)
    return world
