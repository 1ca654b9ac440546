import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from duelopt.config import ConfigError
from duelopt.optimizer import DuelingOptimizer

SIM = {
    "rounds": 3,
    "duels_per_round": 4,
    "batch": {"mode": "fixed", "m": 1},
    "world": {"type": "latent", "k": 4, "n_inputs": 20},
}


def test_get_params_round_trip_and_clone():
    opt = DuelingOptimizer(rounds=5, sampler="rucb", seed=2)
    params = opt.get_params()
    assert params["rounds"] == 5 and params["sampler"] == "rucb"
    assert params["alpha"] is None
    twin = clone(opt)
    assert twin.get_params() == params


def test_fit_simulated_sets_attributes():
    opt = DuelingOptimizer(seed=1, config=SIM)
    assert opt.fit() is opt
    assert opt.n_arms_ == 4
    assert opt.best_id_ == opt.ranking_[0]
    assert sorted(opt.ranking_) == ["p000", "p001", "p002", "p003"]
    assert len(opt.trace_) == 3
    assert opt.stopped_early_ is False
    assert opt.score() == max(opt.borda_)
    # simulated arms have no text; predict falls back to the arm id
    assert opt.predict() == opt.best_id_


def test_unfitted_predict_raises():
    with pytest.raises(NotFittedError):
        DuelingOptimizer().predict()
    with pytest.raises(NotFittedError):
        DuelingOptimizer().score()


def test_flat_params_override_config():
    opt = DuelingOptimizer(rounds=1, sampler="random", config=dict(SIM))
    opt.fit()
    cfg = opt.result_.config
    assert cfg["rounds"] == 1 and cfg["sampler"]["kind"] == "random"


def test_unset_flat_params_leave_config_alone():
    opt = DuelingOptimizer(config=dict(SIM, sampler={"kind": "rucb"}))
    opt.fit()
    assert opt.result_.config["sampler"]["kind"] == "rucb"
    assert opt.result_.config["rounds"] == 3


def test_fit_prompts_requires_inputs():
    with pytest.raises(ConfigError, match="inputs"):
        DuelingOptimizer(judge="remote").fit(["prompt a", "prompt b"])


def test_fit_prompts_validates_candidates():
    with pytest.raises(ValueError, match="at least 2"):
        DuelingOptimizer().fit(["only one"])
    with pytest.raises(ValueError, match="non-empty"):
        DuelingOptimizer().fit(["fine", "   "])


def test_fit_live_prompts_with_fake_judge():
    opt = DuelingOptimizer(
        rounds=2,
        duels_per_round=3,
        judge="remote",
        seed=4,
        config={
            "batch": {"mode": "fixed", "m": 1},
            "world": {"inputs": ["Is water wet?", "Is ice cold?"]},
        },
    )
    opt.fit(
        ["Answer yes or no.", "Answer with an explanation."],
        transport=lambda body: '{"winner": "X"}',
    )
    assert opt.predict() in ("Answer yes or no.", "Answer with an explanation.")
    assert opt.best_prompt_ == opt.predict()
    assert opt.n_arms_ == 2


def test_labeled_fraction_flows_through():
    opt = DuelingOptimizer(labeled_fraction=0.5, seed=0, config=dict(SIM))
    opt.fit()
    sources = {row["source"] for row in opt.result_.duel_log}
    assert "label" in sources
