"""Constrained subproblem solves: nonlocal DG states, local CG states.

Dirichlet data (volume constraints on the nonlocal side, point values on
the local side) is imposed by dof elimination: constrained rows/columns are
removed and their data moved to the right-hand side.  The reduced systems
are symmetric positive definite and solved by banded Cholesky
factorizations, factored once and reused across the many solves the
optimizer performs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from . import fem_assembly as fem
from .fem_assembly import CgField, DgField, assemble_local_stiffness, assemble_nonlocal_stiffness
from .geometry import DomainLayout, Mesh1D, build_interval_mesh, layer_nodes
from .kernels import KernelSpec


class FactorizationError(RuntimeError):
    """Reduced system not SPD; indicates an assembly bug."""


def _upper_band(A: np.ndarray, rows, cols) -> tuple:
    """Upper-band storage of the (rows, cols) submatrix of symmetric A."""
    sub = A[np.ix_(rows, cols)]
    n = sub.shape[0]
    nz = np.nonzero(sub)
    bw = int(np.max(nz[0] - nz[1])) if nz[0].size else 0
    bw = max(bw, 0)
    ab = np.zeros((bw + 1, n))
    for k in range(bw + 1):
        ab[bw - k, k:] = np.diagonal(sub, k)
    return ab, sub


class BandedSpdSolver:
    """Cholesky of a banded SPD matrix, reusable for many right-hand sides."""

    def __init__(self, A: np.ndarray, free: np.ndarray):
        self.free = free
        ab, self.reduced = _upper_band(A, free, free)
        try:
            self._chol = cholesky_banded(ab, lower=False)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise FactorizationError(f"reduced matrix is not SPD: {exc}") from exc

    def solve(self, b):
        return cho_solve_banded((self._chol, False), b)


class NonlocalOperator:
    """Assembled nonlocal stiffness with the interior dofs factored out.

    Elements inside ``interior`` carry the unknowns; every other element is
    constrained (volume-constraint data or control values).
    """

    def __init__(self, mesh: Mesh1D, kernel: KernelSpec, interior, backend=None):
        self.mesh = mesh
        self.kernel = kernel
        self.stiffness = assemble_nonlocal_stiffness(mesh, kernel, backend=backend)
        els = mesh.elements_within(interior)
        self.free = np.stack([2 * els, 2 * els + 1], axis=1).ravel()
        mask = np.ones(2 * mesh.n_elements, dtype=bool)
        mask[self.free] = False
        self.constrained = np.nonzero(mask)[0]
        self._solver = BandedSpdSolver(self.stiffness.matrix, self.free)
        self._A_fc = self.stiffness.matrix[np.ix_(self.free, self.constrained)]

    @property
    def matrix(self) -> np.ndarray:
        return self.stiffness.matrix

    def solve(self, load: np.ndarray, constrained_values: np.ndarray) -> DgField:
        """Solve with full-length load vector and constrained-dof data."""
        g = np.asarray(constrained_values, dtype=float)[self.constrained]
        rhs = load[self.free] - self._A_fc @ g
        coeffs = np.array(constrained_values, dtype=float)
        coeffs[self.free] = self._solver.solve(rhs)
        return DgField(self.mesh, coeffs)

    def solve_adjoint_free(self, rhs_free: np.ndarray) -> np.ndarray:
        """Adjoint solve on the free dofs (the matrix is symmetric)."""
        return self._solver.solve(rhs_free)


class LocalOperator:
    """P1 stiffness on the local mesh with both boundary nodes constrained."""

    def __init__(self, mesh: Mesh1D, gamma_c: float, gamma_D: float):
        self.mesh = mesh
        self.matrix = assemble_local_stiffness(mesh)
        self.node_c = mesh.node_index(gamma_c)
        self.node_D = mesh.node_index(gamma_D)
        self.constrained = np.array(sorted((self.node_c, self.node_D)))
        mask = np.ones(mesh.nodes.size, dtype=bool)
        mask[self.constrained] = False
        self.free = np.nonzero(mask)[0]
        self._solver = BandedSpdSolver(self.matrix, self.free)
        self._K_fc = self.matrix[np.ix_(self.free, self.constrained)]

    def solve(self, load: np.ndarray, theta_l: float, gamma_D_value: float) -> CgField:
        coeffs = np.zeros(self.mesh.nodes.size)
        coeffs[self.node_c] = theta_l
        coeffs[self.node_D] = gamma_D_value
        rhs = load[self.free] - self._K_fc @ coeffs[self.constrained]
        coeffs[self.free] = self._solver.solve(rhs)
        return CgField(self.mesh, coeffs)

    def solve_adjoint_free(self, rhs_free: np.ndarray) -> np.ndarray:
        return self._solver.solve(rhs_free)


@dataclass
class StatePair:
    """Nonlocal and local states for one pair of controls."""

    nonlocal_state: DgField
    local_state: CgField


def constrained_data_vector(mesh: Mesh1D, regions_and_data) -> np.ndarray:
    """Full-length DG vector carrying interpolated data on given regions.

    ``regions_and_data`` is an iterable of (interval, callable-or-array)
    pairs; callables are interpolated at the dof coordinates.
    """
    g = np.zeros(2 * mesh.n_elements)
    coords = fem.dg_dof_coords(mesh)
    for interval, data in regions_and_data:
        els = mesh.elements_within(interval)
        dofs = np.stack([2 * els, 2 * els + 1], axis=1).ravel()
        g[dofs] = data(coords[dofs]) if callable(data) else np.asarray(data, dtype=float)
    return g


def solve_nonlocal_state(layout: DomainLayout, kernel: KernelSpec, mesh: Mesh1D,
                         theta_n, f_load, eta_D_data=None, backend=None) -> DgField:
    """One-shot nonlocal state solve (the optimizer caches the operator)."""
    op = NonlocalOperator(mesh, kernel, layout.omega_n, backend=backend)
    b = fem.assemble_load(mesh, "DG", f_load, region=layout.omega_n)
    pairs = [(layout.eta_c, theta_n)]
    if eta_D_data is not None:
        pairs.append((layout.eta_D, eta_D_data))
    g = constrained_data_vector(mesh, pairs)
    return op.solve(b, g)


def solve_local_state(layout: DomainLayout, mesh: Mesh1D, theta_l: float,
                      f_load, gamma_D_value: float = 0.0) -> CgField:
    op = LocalOperator(mesh, layout.gamma_c, layout.gamma_D)
    b = fem.assemble_load(mesh, "CG", f_load, region=layout.omega_l)
    return op.solve(b, float(theta_l), float(gamma_D_value))


def solve_global_nonlocal(kernel: KernelSpec, omega, f_load, sigma_n, h: float,
                          interior_breakpoints=(), backend=None) -> DgField:
    """Reference solve on the full domain omega plus its interaction layers.

    ``sigma_n`` supplies the volume-constraint data on both layers.
    """
    eps = kernel.epsilon
    lo, hi = float(omega[0]), float(omega[1])
    bps = [lo] + sorted(b for b in interior_breakpoints if lo < b < hi) + [hi]
    mesh = Mesh1D(np.unique(np.concatenate([
        layer_nodes(lo, lo - eps, h),
        build_interval_mesh(bps, h).nodes,
        layer_nodes(hi, hi + eps, h),
    ])), h=h)
    op = NonlocalOperator(mesh, kernel, (lo, hi), backend=backend)
    b = fem.assemble_load(mesh, "DG", f_load, region=(lo, hi))
    g = constrained_data_vector(mesh, [((lo - eps, lo), sigma_n), ((hi, hi + eps), sigma_n)])
    return op.solve(b, g)
