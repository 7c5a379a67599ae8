"""Python interface to the pathmkv particle solver and its numerical checks."""

import json as _json

from ._core import (
    BlowupError,
    CapacityError,
    ConfigError,
    DomainError,
    Error,
    builtin_models,
    criteria,
    investment_hamiltonian,
    set_threads,
    simulate,
    subcommands,
    version,
    wasserstein2_points,
)
from . import _core

__all__ = [
    "BlowupError",
    "CapacityError",
    "ConfigError",
    "DomainError",
    "Error",
    "builtin_models",
    "config_schema",
    "criteria",
    "investment_hamiltonian",
    "parse_config",
    "run",
    "run_criterion",
    "set_threads",
    "simulate",
    "subcommands",
    "version",
    "wasserstein2_points",
]


def config_schema():
    """The configuration schema as a dict."""
    return _json.loads(_core.config_schema_json())


def parse_config(text):
    """Parse and validate a JSON configuration text; raises ConfigError."""
    return _json.loads(_core.parse_config_json(text))


def run(subcommand, config=None, out_dir="out", seed=None, threads=None, write_files=False):
    """Run a subcommand; returns (exit_status, report dict)."""
    status, report = _core.run_json(subcommand, _json.dumps(config or {}), str(out_dir), seed, threads, write_files)
    return status, _json.loads(report)


def run_criterion(criterion_id, seed=20240611):
    """Run one acceptance criterion; returns its result dict."""
    return _json.loads(_core.run_criterion_json(criterion_id, seed))
