"""Label-free prompt optimization by pairwise dueling.

Candidate prompts duel on sampled inputs; a judge (simulated, LLM, or
human) picks winners; a preference ledger accumulates discounted win
counts; a bandit sampler decides who duels next; periodic mutation breeds
new candidates from the leaders. No gold labels anywhere in the loop.

Entry points: ``Engine`` for full control, ``DuelingOptimizer`` for the
estimator-style interface, ``duelopt`` on the command line.
"""

from .batching import BatchPolicy, batch_size, required_samples
from .behavioral import (
    CoverState,
    behavioral_distance,
    behavioral_vector,
    compute_cover_state,
    covering_radius,
    redundancy_prune,
    zoom_radius,
)
from .config import ConfigError, DEFAULT_CONFIG, normalize_config, validate_config
from .engine import (
    CostMeter,
    Engine,
    EngineAborted,
    EngineError,
    RunResult,
    predicted_call_budget,
)
from .judges import (
    AuthError,
    DuelOutcome,
    DuelPayload,
    DuelTicket,
    DuplicateJudgmentError,
    HumanJudgeQueue,
    JudgeCalibration,
    JudgeError,
    PerInputResult,
    TransportError,
    UnknownDuelError,
    oracle_judge,
    partial_label_outcome,
    remote_llm_judge,
    simulated_judge,
)
from .ledger import PairStats, PreferenceLedger
from .mutation import MutationEvent, MutationPolicy, MutatorError, mutation_step
from .optimizer import DuelingOptimizer
from .records import Pool, PromptRecord
from .samplers import SamplerConfig, make_sampler
from .stopping import StoppingConfig, StoppingStatus, check_stopping, pac_confidence_bound
from .worldmodel import ExplicitMatrixWorld, LatentWorld, build_world, true_scores

__version__ = "0.1.0"

__all__ = [
    "AuthError",
    "BatchPolicy",
    "ConfigError",
    "CostMeter",
    "CoverState",
    "DEFAULT_CONFIG",
    "DuelOutcome",
    "DuelPayload",
    "DuelTicket",
    "DuelingOptimizer",
    "DuplicateJudgmentError",
    "Engine",
    "EngineAborted",
    "EngineError",
    "ExplicitMatrixWorld",
    "HumanJudgeQueue",
    "JudgeCalibration",
    "JudgeError",
    "LatentWorld",
    "MutationEvent",
    "MutationPolicy",
    "MutatorError",
    "PairStats",
    "PerInputResult",
    "Pool",
    "PreferenceLedger",
    "PromptRecord",
    "RunResult",
    "SamplerConfig",
    "StoppingConfig",
    "StoppingStatus",
    "TransportError",
    "UnknownDuelError",
    "batch_size",
    "behavioral_distance",
    "behavioral_vector",
    "build_world",
    "check_stopping",
    "compute_cover_state",
    "covering_radius",
    "make_sampler",
    "mutation_step",
    "normalize_config",
    "oracle_judge",
    "pac_confidence_bound",
    "partial_label_outcome",
    "predicted_call_budget",
    "redundancy_prune",
    "remote_llm_judge",
    "required_samples",
    "simulated_judge",
    "true_scores",
    "validate_config",
    "zoom_radius",
]
