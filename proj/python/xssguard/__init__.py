"""Python bindings for the xssguard core library."""

import json

from ._core import (
    CLASSIFIERS,
    FEATURES,
    ConfigError,
    Dataset,
    DomainError,
    Error,
    Model,
    ParseError,
    TrainingError,
    auc,
    generate,
    metrics,
    parse_csv,
    rank,
    read_csv,
    train,
    write_scenario,
)
from ._core import evaluate_json as _evaluate_json
from ._core import replay_jsonl as _replay_jsonl

__all__ = [
    "CLASSIFIERS",
    "FEATURES",
    "ConfigError",
    "Dataset",
    "DomainError",
    "Error",
    "Model",
    "ParseError",
    "TrainingError",
    "auc",
    "evaluate",
    "generate",
    "metrics",
    "parse_csv",
    "rank",
    "read_csv",
    "replay",
    "train",
    "write_scenario",
]


def evaluate(dataset, classifiers=None, k=10, seed=42, params=None, timings=False):
    """Cross-validate classifiers and return the report as a dict."""
    return json.loads(_evaluate_json(dataset, classifiers, k, seed, params or {}, timings))


def replay(scenario, model, policy="flag_sensitive", answers=None, timeout_ms=120000):
    """Replay a scenario file and return the session records."""
    text = _replay_jsonl(scenario, model, policy, answers, timeout_ms)
    return [json.loads(line) for line in text.splitlines()]
