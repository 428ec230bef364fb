"""Interactive preference learning from user edits, backed by a C++ core."""

import json

from . import _prelude
from ._prelude import (
    ConfigError,
    IntegrityError,
    IoError,
    LoadError,
    NotFoundError,
    PreludeError,
    UsageError,
    edit_distance,
    embed,
    generation_prompt,
    levenshtein,
    tokenize,
)

__all__ = [
    "ConfigError",
    "IntegrityError",
    "IoError",
    "LoadError",
    "NotFoundError",
    "PreludeError",
    "UsageError",
    "binned_normalized",
    "cumulative_cost",
    "edit_distance",
    "embed",
    "generation_prompt",
    "levenshtein",
    "run_experiment",
    "schedule",
    "tokenize",
    "zero_cost_fraction",
]


def _overrides(**fields):
    return json.dumps({k: v for k, v in fields.items() if v is not None})


def schedule(config, *, rounds=None, seed=None):
    """Doc ids in round order for the config's corpus."""
    return _prelude.schedule(str(config), _overrides(rounds=rounds, seed=seed))


def run_experiment(config, *, policy=None, rounds=None, seed=None, log_path=None):
    """Run the simulated-user loop described by a config file.

    Keyword arguments override the matching config fields; `policy` is a
    dict merged over the configured one. Returns (summary, logs) as plain
    dicts.
    """
    summary, logs = _prelude.run_experiment(
        str(config),
        _overrides(policy=policy, rounds=rounds, seed=seed),
        None if log_path is None else str(log_path),
    )
    return json.loads(summary), [json.loads(line) for line in logs.splitlines()]


def _jsonl(logs):
    return "".join(json.dumps(log) + "\n" for log in logs)


def cumulative_cost(logs):
    return _prelude.cumulative_cost(_jsonl(logs))


def binned_normalized(logs, bin=20):
    return _prelude.binned_normalized(_jsonl(logs), bin)


def zero_cost_fraction(logs, bin=20):
    return _prelude.zero_cost_fraction(_jsonl(logs), bin)
