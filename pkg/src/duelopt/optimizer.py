"""Estimator facade: the duel loop behind a scikit-learn interface.

``DuelingOptimizer`` is for notebook and pipeline use: flat hyperparameters,
``fit`` runs the loop, fitted attributes expose the ranked pool. Anything
not surfaced as a flat parameter rides in via ``config``, which takes a
full run document. Flat parameters are unset (``None``) by default so an
explicit ``config`` value is never silently overridden.
"""

from __future__ import annotations

import copy

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import ConfigError
from .engine import Engine, RunResult


def _check_prompts(X) -> list[str]:
    prompts = list(X)
    if len(prompts) < 2:
        raise ValueError(f"need at least 2 candidate prompts to duel, got {len(prompts)}")
    for pos, text in enumerate(prompts):
        if not isinstance(text, str) or not text.strip():
            raise ValueError(f"prompt {pos} must be a non-empty string")
    return prompts


class DuelingOptimizer(BaseEstimator):
    """Select the best prompt from pairwise preference feedback alone.

    ``fit(X)`` duels the candidate prompts ``X`` (or a simulated pool when
    ``X`` is omitted) under the configured judge, folding wins into a
    preference ledger; the arm with the top Copeland score is the selection.
    ``predict()`` returns that prompt's text.

    There is no per-sample ``transform``: the estimator learns a ranking of
    its candidates, not a mapping over inputs.
    """

    def __init__(
        self,
        rounds=None,
        duels_per_round=None,
        sampler=None,
        alpha=None,
        seed=None,
        judge=None,
        judge_accuracy=None,
        labeled_fraction=None,
        mutation=None,
        config=None,
    ):
        self.rounds = rounds
        self.duels_per_round = duels_per_round
        self.sampler = sampler
        self.alpha = alpha
        self.seed = seed
        self.judge = judge
        self.judge_accuracy = judge_accuracy
        self.labeled_fraction = labeled_fraction
        self.mutation = mutation
        self.config = config

    def _assembled_config(self, X) -> dict:
        doc = copy.deepcopy(self.config) if self.config is not None else {}
        if not isinstance(doc, dict):
            raise ConfigError("(root): config must be a mapping")
        doc.setdefault("sampler", {})
        for key, value in (("rounds", self.rounds), ("duels_per_round", self.duels_per_round), ("seed", self.seed)):
            if value is not None:
                doc[key] = value
        if self.sampler is not None:
            doc["sampler"]["kind"] = self.sampler
        if self.alpha is not None:
            doc["sampler"]["alpha"] = self.alpha
        doc["sampler"].setdefault("kind", "dts_copeland")
        judge_doc = doc.setdefault("judge", {})
        if self.judge is not None:
            judge_doc["type"] = self.judge
        if self.judge_accuracy is not None:
            judge_doc["accuracy"] = self.judge_accuracy
        if self.labeled_fraction is not None:
            judge_doc["labeled_fraction"] = self.labeled_fraction
        if self.mutation is not None:
            doc.setdefault("mutation", {})["mode"] = self.mutation
        if X is not None:
            world = doc.setdefault("world", {})
            world["type"] = "live"
            world["prompts"] = _check_prompts(X)
            if "inputs" not in world:
                raise ConfigError(
                    "world.inputs: dueling live prompts needs the task inputs "
                    "(pass config={'world': {'inputs': [...]}})"
                )
        return doc

    def fit(self, X=None, y=None, transport=None):
        """Run the duel loop to completion. ``y`` is ignored (label-free)."""
        engine = Engine(self._assembled_config(X), transport=transport)
        result: RunResult = engine.run()
        ledger = result.ledger
        order = sorted(
            range(ledger.size),
            key=lambda i: (-ledger.copeland_scores()[i], -ledger.borda_scores()[i], i),
        )
        self.engine_ = engine
        self.result_ = result
        self.ledger_ = ledger
        self.ranking_ = [ledger.arm_ids[i] for i in order]
        self.copeland_ = ledger.copeland_scores()
        self.borda_ = ledger.borda_scores()
        self.best_id_ = result.final_best.arm_id
        self.best_prompt_ = result.final_best.text
        self.trace_ = result.trace
        self.stopped_early_ = result.stopped_early
        self.n_arms_ = ledger.size
        return self

    def predict(self, X=None):
        """The selected prompt's text (falls back to its id in simulation)."""
        check_is_fitted(self, "best_id_")
        return self.best_prompt_ if self.best_prompt_ else self.best_id_

    def score(self, X=None, y=None) -> float:
        """Empirical Borda score of the selected arm (higher is better)."""
        check_is_fitted(self, "best_id_")
        return float(self.borda_[self.ledger_.index_of(self.best_id_)])
