"""Taylor-Hood discretisation of the steady incompressible Navier-Stokes equations."""

from .assembly import (
    assemble_convection,
    assemble_divergence_coupling,
    assemble_graddiv,
    assemble_load,
    assemble_mass,
    assemble_newton_linearization,
    assemble_stiffness,
    assemble_viscous_graddiv,
    pressure_weights,
)
from .bc import AssembledSystem, apply_dirichlet, apply_lid_bc, dirichlet_data, lift_boundary
from .dofmap import DofMap, DofMismatchError, Field, build_dofmap
from .interpolation import IHMode, NudgingOperator, assemble_nudging, interpolate_IH, interpolation_matrix
from .kernels import BACKEND
from .norms import compute_norms, error_norms, h1_seminorm, l2_norm, velocity_gradients

__all__ = [
    "AssembledSystem",
    "BACKEND",
    "DofMap",
    "DofMismatchError",
    "Field",
    "IHMode",
    "NudgingOperator",
    "apply_dirichlet",
    "apply_lid_bc",
    "assemble_convection",
    "assemble_divergence_coupling",
    "assemble_graddiv",
    "assemble_load",
    "assemble_mass",
    "assemble_newton_linearization",
    "assemble_nudging",
    "assemble_stiffness",
    "assemble_viscous_graddiv",
    "build_dofmap",
    "compute_norms",
    "dirichlet_data",
    "error_norms",
    "h1_seminorm",
    "interpolate_IH",
    "interpolation_matrix",
    "l2_norm",
    "lift_boundary",
    "pressure_weights",
    "velocity_gradients",
]
