"""Python bindings for the nlct reconstruction library."""

import json

from ._nlct import *  # noqa: F401,F403
from ._nlct import (
    __version__,
    _correlation_bound_case1,
    _correlation_bound_case2,
    _run_command,
    _validate_config,
)


def correlation_bound_case1(norm_x, samples=50000, seed=1):
    return json.loads(_correlation_bound_case1(norm_x, samples, seed))


def correlation_bound_case2(norm_x, samples=50000, seed=1):
    return json.loads(_correlation_bound_case2(norm_x, samples, seed))


def validate_config(config):
    """Raise ValidationError (a ValueError) naming the offending field."""
    _validate_config(json.dumps(config))


def run(command, config, quick=False):
    """Run one of phantom/simulate/reconstruct/verify/compare; returns its summary."""
    return json.loads(_run_command(command, json.dumps(config), quick))
