"""Optimal job switching with consumption and investment.

Thin Python layer over the C++ library: obstacle and integral-equation
solvers for the switching boundaries, primal strategy surfaces and the
Monte Carlo checks.
"""

import json as _json

from ._core import (
    BoundaryCurve,
    BoundaryPair,
    DerivedConstants,
    Grid,
    IeSolution,
    IeSolverConfig,
    Model,
    ModelParams,
    NumericalError,
    ObstacleSolution,
    StrategySurface,
    ValidationError,
    annuity_factor,
    q0,
    q1,
    simulate,
    solve_boundaries_ie,
    solve_obstacle,
    validate,
)
from ._core import run_command as _run_command

__all__ = [
    "BoundaryCurve",
    "BoundaryPair",
    "DerivedConstants",
    "Grid",
    "IeSolution",
    "IeSolverConfig",
    "Model",
    "ModelParams",
    "NumericalError",
    "ObstacleSolution",
    "StrategySurface",
    "ValidationError",
    "annuity_factor",
    "q0",
    "q1",
    "run_command",
    "simulate",
    "solve_boundaries_ie",
    "solve_obstacle",
    "validate",
]


def run_command(command, config=None, out_dir="", per_path=False):
    """Run a CLI command in-process. Returns (exit_code, out_dir, log)."""
    text = "" if config is None else _json.dumps(config)
    return _run_command(command, text, str(out_dir), per_path)
