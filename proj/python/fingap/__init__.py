"""Finite gap Jacobi matrices: equilibrium measures, isospectral tori, sum rules."""

import json

from ._fingap import (
    AccuracyError,
    DomainError,
    InvalidInput,
    InvariantViolation,
    __version__,
    dist_to_torus,
    equilibrium_json as _equilibrium_json,
    green,
    lt_free_bound,
    run_cli,
    torus_coefficients,
)


def equilibrium(bands):
    """Equilibrium data of the set as a dict (capacity, gap zeros, harmonic measures, ...)."""
    return json.loads(_equilibrium_json(bands))


__all__ = [
    "AccuracyError",
    "DomainError",
    "InvalidInput",
    "InvariantViolation",
    "__version__",
    "dist_to_torus",
    "equilibrium",
    "green",
    "lt_free_bound",
    "run_cli",
    "torus_coefficients",
]
