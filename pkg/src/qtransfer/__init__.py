"""Indirect optimal control of quantum state transfer.

Constrained-expression collocation of the Pontryagin boundary-value problem
with a saturated control, damped Gauss-Newton under slack-penalty
continuation, and an independent RK4 / matrix-exponential oracle.
"""

from .basis import Activation, BasisKind, BasisSpec, GridScheme, TimeMap, collocation_grid, eval_basis
from .oracle import Thresholds, VerificationReport, constant_control_propagator, rk4_propagate, verify
from .pmp import (
    NonConvergence,
    SaturationSpec,
    SolveOptions,
    SolveReport,
    UnknownVector,
    recover_trajectory,
    residual_jacobian,
    residual_vector,
    solve,
)
from .quantum import QuantumControlProblem, fidelity, lie_rank, three_level_problem

__version__ = "0.1.0"

__all__ = [
    "Activation", "BasisKind", "BasisSpec", "GridScheme", "TimeMap", "collocation_grid",
    "eval_basis", "Thresholds", "VerificationReport", "constant_control_propagator",
    "rk4_propagate", "verify", "NonConvergence", "SaturationSpec", "SolveOptions",
    "SolveReport", "UnknownVector", "recover_trajectory", "residual_jacobian",
    "residual_vector", "solve", "QuantumControlProblem", "fidelity", "lie_rank",
    "three_level_problem",
]
