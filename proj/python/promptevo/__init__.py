"""Evolutionary prompt-pair optimizer.

Thin Python layer over the C++ core: metrics, oracle-answer parsing, synthetic
evolution runs and the command-line entry point.
"""

import json

from . import _promptevo
from ._promptevo import (
    ConfigError,
    Error,
    ParseError,
    accuracy,
    f1_macro,
    inverse_bce,
    normalize_scores,
    parse_group_indices,
    parse_prompt_pairs,
)

__all__ = [
    "ConfigError",
    "Error",
    "ParseError",
    "accuracy",
    "default_config",
    "evolve_synthetic",
    "f1_macro",
    "inverse_bce",
    "make_task",
    "normalize_scores",
    "parse_group_indices",
    "parse_prompt_pairs",
    "run_cli",
]


def default_config():
    """Default run hyperparameters as a dict (the `run` section of a config file)."""
    return json.loads(_promptevo.default_config_json())


def make_task(dim=32, n_train=200, n_val=100, n_test=200, seed=7):
    """Describes a generated separable task: dimension, planted pair and split sizes."""
    return json.loads(_promptevo.make_task_json(dim, n_train, n_val, n_test, seed))


def evolve_synthetic(config=None, dim=32, n_train=200, n_val=100, n_test=200, task_seed=7, **overrides):
    """Runs evolution against the synthetic oracle and returns {alpha, metric, log, buffer}.

    `config` is a run-section dict; keyword overrides are applied on top of it.
    """
    merged = dict(config or {})
    merged.update(overrides)
    return json.loads(_promptevo.evolve_synthetic_json(json.dumps(merged), dim, n_train, n_val, n_test, task_seed))


def run_cli(*args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _promptevo.cli_run([str(a) for a in args])
