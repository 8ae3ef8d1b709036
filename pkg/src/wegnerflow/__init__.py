"""Exact and numerical solutions of the isospectral flow dH/ds = [G(H), H]
with the Mielke generator (upper triangle minus lower triangle)."""

__version__ = "0.1.0"

from .closed3 import (
    Exact2Solution,
    Exact3Solution,
    calibrate3,
    degenerate_branch,
    eval2,
    eval3,
    eval3_series,
    exact2x2,
    phase_at,
)
from .errors import FlowError
from .exact import ExactRun, exact_trajectory
from .expsum import ExpSum
from .flow_numeric import FlowTrajectory, IntegrationPlan, integrate, integrate_many
from .matcore import GeneratorKind, HermitianMatrix, flow_rhs, mielke_generator, wegner_generator
from .spectra import eigh, exponents, gate_coefficients
from .tridiag import TridiagExact, build_from_parameters, calibrate_tridiag, eval_tridiag
from .verify4 import residuals_g0zero, residuals_general

__all__ = [
    "Exact2Solution", "Exact3Solution", "ExactRun", "ExpSum", "FlowError", "FlowTrajectory",
    "GeneratorKind", "HermitianMatrix", "IntegrationPlan", "TridiagExact",
    "build_from_parameters", "calibrate3", "calibrate_tridiag", "degenerate_branch", "eigh",
    "eval2", "eval3", "eval3_series", "eval_tridiag", "exact2x2", "exact_trajectory",
    "exponents", "flow_rhs", "gate_coefficients", "integrate", "integrate_many",
    "mielke_generator", "phase_at", "residuals_g0zero", "residuals_general", "wegner_generator",
]
