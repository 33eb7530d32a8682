"""Optimization-based coupling of nonlocal and local diffusion in 1D."""

from .geometry import DomainLayout, Mesh1D, build_meshes, standard_layout
from .kernels import INTEGRABLE, SINGULAR, KernelSpec
from .optimizer import (ControlPair, CoupledProblem, LtnSolution, solve_bfgs,
                        solve_normal_equations, splice)
from .state_solvers import (StatePair, solve_global_nonlocal, solve_local_state,
                            solve_nonlocal_state)

__all__ = [
    "DomainLayout", "Mesh1D", "build_meshes", "standard_layout",
    "INTEGRABLE", "SINGULAR", "KernelSpec",
    "ControlPair", "CoupledProblem", "LtnSolution",
    "solve_bfgs", "solve_normal_equations", "splice",
    "StatePair", "solve_global_nonlocal", "solve_local_state", "solve_nonlocal_state",
]

__version__ = "0.1.0"
