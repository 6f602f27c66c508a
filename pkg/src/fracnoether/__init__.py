"""Fractional variational calculus on uniform grids.

Discrete Riemann-Liouville and Caputo operators, fractional differential
operators with their formal adjoints, fractional actions and Lagrange
expressions, and numerical verification of second-Noether identities,
including a fractional electromagnetism example.
"""

from .emfield import EMFields, Potential, em_fields, em_lagrangian, em_noether_residual, gauge_transform
from .fracops import FracOrderError, OpKind, gamma, left_caputo, right_caputo
from .grid import GridError, GridField, GridFn1D, TensorGrid, UniformGrid1D, integrate, sample_1d, sample_field
from .noether import IdentityReport, ParamFunctions, Transformation, invariance_gap, noether_residual, transform
from .opalgebra import FracOperator, adjoint, apply, apply_adjoint, duality_residual
from .variational import (
    FieldConfig,
    Lagrangian1D,
    LagrangianDensity,
    Trajectory,
    action_1d,
    action_md,
    euler_lagrange_1d,
    euler_lagrange_md,
)

__version__ = "0.1.0"

__all__ = [
    "EMFields",
    "FieldConfig",
    "FracOperator",
    "FracOrderError",
    "GridError",
    "GridField",
    "GridFn1D",
    "IdentityReport",
    "Lagrangian1D",
    "LagrangianDensity",
    "OpKind",
    "ParamFunctions",
    "Potential",
    "TensorGrid",
    "Trajectory",
    "Transformation",
    "UniformGrid1D",
    "action_1d",
    "action_md",
    "adjoint",
    "apply",
    "apply_adjoint",
    "duality_residual",
    "em_fields",
    "em_lagrangian",
    "em_noether_residual",
    "euler_lagrange_1d",
    "euler_lagrange_md",
    "gamma",
    "gauge_transform",
    "integrate",
    "invariance_gap",
    "left_caputo",
    "noether_residual",
    "right_caputo",
    "sample_1d",
    "sample_field",
    "transform",
]
