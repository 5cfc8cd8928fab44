"""Dynamic frictional contact of a thermoviscoelastic body with nonmonotone boundary laws.

P1 finite elements in 2D, Clarke-subdifferential boundary laws with smoothing
and continuation, backward Euler subproblem solvers and a staggered
fixed-point coupling of the mechanical and thermal problems.
"""

from .coupling import (
    CouplingState,
    FixedPointError,
    SmallnessError,
    check_smallness,
    coupling_map,
    fixed_point_solve,
    memory_convolution,
    verify_estimates,
)
from .fem import Discretization, FormKind, GreenKind, assemble_bilinear, discrete_green_residual, estimate_trace_constants
from .materials import MaterialModel, check_hypotheses
from .mesh import Field, FieldKind, Mesh, MeshError, Tag, load_mesh, rectangle_mesh
from .nonsmooth import BoundaryLaw, IntervalValue, LawKind
from .scenario import Scenario, ScenarioError, parse_scenario
from .solvers import SolverConfig, SolverError, TimeGrid, Trajectory, solve_mechanical, solve_thermal
from .tensors import SymTensor, VectorValue, deviatoric_split, tensor_inner

__version__ = "0.1.0"

__all__ = [
    "BoundaryLaw", "CouplingState", "Discretization", "Field", "FieldKind", "FixedPointError", "FormKind",
    "GreenKind", "IntervalValue", "LawKind", "MaterialModel", "Mesh", "MeshError", "Scenario", "ScenarioError",
    "SmallnessError", "SolverConfig", "SolverError", "SymTensor", "Tag", "TimeGrid", "Trajectory", "VectorValue",
    "assemble_bilinear", "check_hypotheses", "check_smallness", "coupling_map", "deviatoric_split",
    "discrete_green_residual", "estimate_trace_constants", "fixed_point_solve", "load_mesh", "memory_convolution",
    "parse_scenario", "rectangle_mesh", "solve_mechanical", "solve_thermal", "tensor_inner", "verify_estimates",
    "__version__",
]
