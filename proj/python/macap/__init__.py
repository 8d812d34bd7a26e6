"""Two-user multiple-access effective capacity solver."""

from _macap import (
    ConvergenceError,
    EstimationError,
    NumericError,
    ParseError,
    boundary_point,
    canonical,
    effective_capacity,
    mi_joint,
    mi_single,
    mmse,
    policy,
    presets,
    region,
    run,
)

__all__ = [
    "ConvergenceError",
    "EstimationError",
    "NumericError",
    "ParseError",
    "boundary_point",
    "canonical",
    "effective_capacity",
    "mi_joint",
    "mi_single",
    "mmse",
    "policy",
    "presets",
    "region",
    "run",
]
