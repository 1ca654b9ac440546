"""Run configuration: JSON document in, validated + default-filled dict out.

A run is fully described by one JSON document. Unknown keys are rejected
(they are usually typos in --set overrides), required keys are reported
with their dotted field path, and defaults are merged only after the raw
document validates.
"""

from __future__ import annotations

import copy
import json
import re

import jsonschema


class ConfigError(ValueError):
    """Invalid run configuration; message carries the dotted field path."""


DEFAULT_CONFIG = {
    "seed": 0,
    "rounds": 30,
    "duels_per_round": 50,
    "fold": "per_input",
    "sampler": {"kind": "dts_copeland", "alpha": 1.2},
    "batch": {"mode": "adaptive", "c_prime": 1.0, "m_min": 1, "m_max": 50, "m": 1},
    "mutation": {
        "mode": "none",
        "period": 10,
        "n_new": 10,
        "n_prune": 10,
        "top_k": 3,
        "eta": 0.3,
        "parent_rank": "top",
        "scripted_texts": [],
    },
    "stopping": {
        "epsilon_target": 0.25,
        "delta": 0.05,
        "cover_trigger": False,
        "pac_trigger": False,
        "bonferroni": False,
    },
    "behavioral": {"n_min": 10, "prune_threshold": 0.0, "rho0": 1.0, "alpha_exp": 0.5},
    "judge": {
        "type": "simulated",
        "accuracy": 1.0,
        "labeled_fraction": 0.0,
        "template": "judge_answer",
        "endpoint": {
            "url": "",
            "model": "",
            "temperature": 0.0,
            "timeout": 30.0,
            "retries": 2,
            "api_key_env": "LLM_API_KEY",
        },
    },
    "world": {
        "type": "latent",
        "k": 10,
        "latent_dim": 4,
        "tau": 0.2,
        "lam": 1.0,
        "u_max": 0.9,
        "spread": 0.5,
        "min_utility_gap": 0.0,
        "exclusion_radius": 0.0,
        "n_inputs": 200,
    },
    "gamma_by_source": {
        "answer": 0.5,
        "reasoning": 0.2,
        "label": 0.5,
        "simulated": 0.5,
        "human": 0.5,
    },
    "cost": {"b_per_prompt": 0},
    "serve": {
        "host": "127.0.0.1",
        "port": 8008,
        "token": None,
        "cors_origins": ["*"],
        "mode": "human_judge",
    },
}

_GAMMA = {"type": "number", "minimum": 0.0, "maximum": 0.5}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["sampler"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "rounds": {"type": "integer", "minimum": 1},
        "duels_per_round": {"type": "integer", "minimum": 1},
        "fold": {"enum": ["per_input", "aggregate"]},
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["dts_copeland", "dts_borda", "rucb", "random"]},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "batch": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["adaptive", "fixed"]},
                "c_prime": {"type": "number", "exclusiveMinimum": 0},
                "m_min": {"type": "integer", "minimum": 1},
                "m_max": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
            },
        },
        "mutation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["none", "latent", "llm", "scripted"]},
                "period": {"type": "integer", "minimum": 1},
                "n_new": {"type": "integer", "minimum": 1},
                "n_prune": {"type": "integer", "minimum": 0},
                "top_k": {"type": "integer", "minimum": 1},
                "eta": {"type": "number", "exclusiveMinimum": 0},
                "parent_rank": {"enum": ["top", "bottom"]},
                "scripted_texts": {"type": "array", "items": {"type": "string"}},
            },
        },
        "stopping": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon_target": {"type": "number", "exclusiveMinimum": 0},
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "cover_trigger": {"type": "boolean"},
                "pac_trigger": {"type": "boolean"},
                "bonferroni": {"type": "boolean"},
            },
        },
        "behavioral": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_min": {"type": "number", "minimum": 0},
                "prune_threshold": {"type": "number", "minimum": 0},
                "rho0": {"type": "number", "exclusiveMinimum": 0},
                "alpha_exp": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "judge": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["simulated", "oracle", "remote", "human"]},
                "accuracy": {"type": "number", "minimum": 0.5, "maximum": 1.0},
                "labeled_fraction": {"type": "number", "minimum": 0.0, "maximum": 1.0},
                "template": {"enum": ["judge_answer", "judge_reasoning", "judge_context"]},
                "endpoint": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "url": {"type": "string"},
                        "model": {"type": "string"},
                        "temperature": {"type": "number", "minimum": 0},
                        "timeout": {"type": "number", "exclusiveMinimum": 0},
                        "retries": {"type": "integer", "minimum": 0},
                        "api_key_env": {"type": "string"},
                    },
                },
            },
        },
        "world": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["latent", "matrix", "live"]},
                "k": {"type": "integer", "minimum": 1},
                "latent_dim": {"type": "integer", "minimum": 1},
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "lam": {"type": "number", "exclusiveMinimum": 0},
                "u_max": {"type": "number"},
                "spread": {"type": "number", "exclusiveMinimum": 0},
                "min_utility_gap": {"type": "number", "minimum": 0},
                "exclusion_radius": {"type": "number", "minimum": 0},
                "n_inputs": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "mu": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}},
                },
                "prompts": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "inputs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            },
            "allOf": [
                {
                    "if": {"properties": {"type": {"const": "matrix"}}, "required": ["type"]},
                    "then": {"required": ["mu"]},
                },
                {
                    "if": {"properties": {"type": {"const": "live"}}, "required": ["type"]},
                    "then": {"required": ["prompts", "inputs"]},
                },
            ],
        },
        "gamma_by_source": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "answer": _GAMMA,
                "reasoning": _GAMMA,
                "label": _GAMMA,
                "simulated": _GAMMA,
                "human": _GAMMA,
            },
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"b_per_prompt": {"type": "integer", "minimum": 0}},
        },
        "serve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "host": {"type": "string"},
                "port": {"type": "integer", "minimum": 1, "maximum": 65535},
                "token": {"type": ["string", "null"]},
                "cors_origins": {"type": "array", "items": {"type": "string"}},
                "mode": {"enum": ["human_judge", "observe"]},
            },
        },
    },
}

_MISSING_PROP = re.compile(r"'([^']+)' is a required property")


def _error_path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        match = _MISSING_PROP.search(error.message)
        if match:
            parts.append(match.group(1))
    return ".".join(parts) if parts else "(root)"


def validate_config(doc: dict) -> None:
    """Schema-check a raw config document; ConfigError names the bad field."""
    if not isinstance(doc, dict):
        raise ConfigError("(root): config must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"{_error_path(best)}: {best.message}")


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def normalize_config(doc: dict) -> dict:
    """Validate, then fill defaults. The result is what the engine consumes."""
    validate_config(doc)
    merged = _deep_merge(DEFAULT_CONFIG, doc)
    if merged["batch"]["m_max"] < merged["batch"]["m_min"]:
        raise ConfigError("batch.m_max: must be >= batch.m_min")
    world = merged["world"]
    if world["type"] == "live" and len(world.get("prompts", [])) < 2:
        raise ConfigError("world.prompts: need at least 2 prompts to duel")
    # The world inherits the run seed unless it pins its own, so one --seed
    # flag revaries the whole experiment.
    world.setdefault("seed", merged["seed"])
    if world["type"] == "live":
        world["n_inputs"] = len(world["inputs"])
    return merged


def apply_override(doc: dict, assignment: str) -> dict:
    """Apply one dotted KEY=VALUE override; VALUE parsed as JSON, else string."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key.path=value")
    path, raw = assignment.split("=", 1)
    keys = [k for k in path.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {assignment!r} has an empty key path")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    for key in keys[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = node[key] = {}
        elif not isinstance(nxt, dict):
            raise ConfigError(f"{'.'.join(keys)}: cannot descend into non-object")
        node = nxt
    node[keys[-1]] = value
    return doc


def load_config_file(path: str) -> dict:
    import sys

    if path == "-":
        raw = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"(root): config is not valid JSON: {exc}") from exc
    return doc
