"""Python bindings for centroidkit."""

import json

from ._core import (
    ConfigError,
    DistributionSpec,
    Error,
    InvalidArgument,
    c2k,
    c2k_bounds,
    cover_count,
    experiment_names,
    hitczenko_surrogate,
    mp_norm,
    mp_norm_exact_even,
    rademacher_norm,
    sample,
    sparse_minoration,
    zp_moment,
    zp_norm,
)
from ._core import run_experiment as _run_experiment

__all__ = [
    "ConfigError",
    "DistributionSpec",
    "Error",
    "InvalidArgument",
    "c2k",
    "c2k_bounds",
    "cover_count",
    "experiment_names",
    "hitczenko_surrogate",
    "mp_norm",
    "mp_norm_exact_even",
    "rademacher_norm",
    "run_experiment",
    "sample",
    "sparse_minoration",
    "zp_moment",
    "zp_norm",
]


def run_experiment(name, config, seed=None, jobs=1):
    """Run a named experiment; `config` is a dict or JSON text. Returns (passed, report dict)."""
    text = config if isinstance(config, str) else json.dumps(config)
    passed, report = _run_experiment(name, text, seed, jobs)
    return passed, json.loads(report)
