"""Discrete operators: DG/CG fields, stiffness matrices, loads, overlap forms.

The nonlocal state lives in a discontinuous piecewise-linear space (two
dofs per element, dof 2e = left value, dof 2e+1 = right value); the local
state in a continuous piecewise-linear space (one dof per node).  The mixed
L2 inner product on the overlap is evaluated on the merged breakpoint
partition of the two meshes, which makes it exact for products of
piecewise-linear fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly_kernels import assemble_pair_matrix
from .geometry import Mesh1D
from .kernels import KernelSpec

_GL3 = np.polynomial.legendre.leggauss(3)
_GL8 = np.polynomial.legendre.leggauss(8)


@dataclass
class DgField:
    """Discontinuous piecewise-linear field: coeffs[2e], coeffs[2e+1]."""

    mesh: Mesh1D
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (2 * self.mesh.n_elements,):
            raise ValueError("DG coefficient count must be 2 x element count")

    @property
    def dof_coords(self) -> np.ndarray:
        return dg_dof_coords(self.mesh)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        e = self.mesh.element_of(x)
        a, b = self.mesh.nodes[e], self.mesh.nodes[e + 1]
        t = (x - a) / (b - a)
        out = (1.0 - t) * self.coeffs[2 * e] + t * self.coeffs[2 * e + 1]
        return float(out) if out.ndim == 0 else out

    def restrict(self, interval) -> "DgField":
        """Field on the submesh of elements inside ``interval``."""
        els = self.mesh.elements_within(interval)
        nodes = np.append(self.mesh.nodes[els], self.mesh.nodes[els[-1] + 1])
        dofs = np.stack([2 * els, 2 * els + 1], axis=1).ravel()
        return DgField(Mesh1D(nodes, h=self.mesh.h), self.coeffs[dofs])


@dataclass
class CgField:
    """Continuous piecewise-linear field: one coefficient per node."""

    mesh: Mesh1D
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.nodes.size,):
            raise ValueError("CG coefficient count must equal node count")

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.mesh.nodes, self.coeffs)
        return float(out) if out.ndim == 0 else out


def dg_dof_coords(mesh: Mesh1D) -> np.ndarray:
    return np.repeat(mesh.nodes, 2)[1:-1]


def dg_interpolate(mesh: Mesh1D, fn) -> DgField:
    return DgField(mesh, fn(dg_dof_coords(mesh)))


def cg_interpolate(mesh: Mesh1D, fn) -> CgField:
    return CgField(mesh, fn(mesh.nodes))


def dg_mass_matrix(mesh: Mesh1D) -> np.ndarray:
    """Block-diagonal DG mass matrix (dense, sizes are small)."""
    n = mesh.n_elements
    M = np.zeros((2 * n, 2 * n))
    for e, L in enumerate(mesh.element_sizes):
        M[2 * e:2 * e + 2, 2 * e:2 * e + 2] = (L / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
    return M


@dataclass
class NonlocalStiffness:
    """Symmetric pair-quadrature matrix over all DG dofs of the mesh."""

    mesh: Mesh1D
    kernel: KernelSpec
    matrix: np.ndarray

    @property
    def band_halfwidth(self) -> int:
        nz = np.nonzero(np.abs(self.matrix) > 0)
        return int(np.max(np.abs(nz[0] - nz[1]))) if nz[0].size else 0


def assemble_nonlocal_stiffness(mesh: Mesh1D, kernel: KernelSpec,
                                backend=None) -> NonlocalStiffness:
    A = assemble_pair_matrix(mesh.nodes, kernel.epsilon, kernel.scale,
                             kernel.is_singular, backend=backend)
    return NonlocalStiffness(mesh, kernel, A)


def assemble_local_stiffness(mesh: Mesh1D) -> np.ndarray:
    """Standard P1 stiffness (tridiagonal, returned dense)."""
    n = mesh.nodes.size
    K = np.zeros((n, n))
    for e, L in enumerate(mesh.element_sizes):
        k = (1.0 / L) * np.array([[1.0, -1.0], [-1.0, 1.0]])
        K[e:e + 2, e:e + 2] += k
    return K


# ---------------------------------------------------------------------------
# loads

@dataclass(frozen=True)
class SmoothFunction:
    fn: object


@dataclass(frozen=True)
class DiracAt:
    point: float


@dataclass(frozen=True)
class PiecewiseFormula:
    """Callable with interior breakpoints where it kinks or blows up."""

    fn: object
    breakpoints: tuple = ()


def _element_quad(a, b, splits, graded=()):
    """Gauss points on [a, b], split at interior breakpoints.

    Sub-intervals whose endpoint lies in ``graded`` get geometric panels
    toward that endpoint so integrable log blow-ups are resolved.
    """
    cuts = sorted({a, b}.union(s for s in splits if a < s < b))
    pts, wts = [], []
    for u, v in zip(cuts[:-1], cuts[1:]):
        panels = [(u, v)]
        for g in graded:
            if abs(u - g) < 1e-14 or abs(v - g) < 1e-14:
                toward_u = abs(u - g) < 1e-14
                edges = (v - u) * np.geomspace(1e-10, 1.0, 9)
                knots = np.concatenate([[u], u + edges]) if toward_u \
                    else np.concatenate([v - edges[::-1], [v]])
                panels = list(zip(knots[:-1], knots[1:]))
                break
        for pa, pb in panels:
            mid, half = 0.5 * (pa + pb), 0.5 * (pb - pa)
            pts.append(mid + half * _GL8[0])
            wts.append(half * _GL8[1])
    return np.concatenate(pts), np.concatenate(wts)


def assemble_load(mesh: Mesh1D, space: str, load, region=None) -> np.ndarray:
    """Load vector int f phi_j over ``region`` (defaults to the mesh span).

    DiracAt produces the vector of basis point values; at a DG interface
    node the element owning the point under the half-open convention
    receives it.
    """
    if space not in ("DG", "CG"):
        raise ValueError("space must be 'DG' or 'CG'")
    lo, hi = region if region is not None else mesh.span
    ndof = 2 * mesh.n_elements if space == "DG" else mesh.nodes.size
    b = np.zeros(ndof)

    if isinstance(load, DiracAt):
        c = load.point
        if not (lo < c < hi):
            return b
        e = int(mesh.element_of(c))
        a, bb = mesh.nodes[e], mesh.nodes[e + 1]
        t = (c - a) / (bb - a)
        if space == "DG":
            b[2 * e] = 1.0 - t
            b[2 * e + 1] = t
        else:
            b[e] += 1.0 - t
            b[e + 1] += t
        return b

    if isinstance(load, PiecewiseFormula):
        fn, splits = load.fn, load.breakpoints
    elif isinstance(load, SmoothFunction):
        fn, splits = load.fn, ()
    elif callable(load):
        fn, splits = load, ()
    else:
        raise TypeError(f"unsupported load {load!r}")

    graded = tuple(splits) if isinstance(load, PiecewiseFormula) else ()
    for e in range(mesh.n_elements):
        a, bb = mesh.nodes[e], mesh.nodes[e + 1]
        u, v = max(a, lo), min(bb, hi)
        if v - u <= 0:
            continue
        x, w = _element_quad(u, v, splits, graded)
        f = w * np.asarray(fn(x), dtype=float)
        t = (x - a) / (bb - a)
        if space == "DG":
            b[2 * e] += np.sum(f * (1.0 - t))
            b[2 * e + 1] += np.sum(f * t)
        else:
            b[e] += np.sum(f * (1.0 - t))
            b[e + 1] += np.sum(f * t)
    return b


# ---------------------------------------------------------------------------
# overlap quadrature

class PointRule:
    """Weighted point set used for the overlap forms.

    The same object serves the exact merged-mesh Gauss rule (norms,
    diagnostics) and the nodal trapezoid rule the coupling objective uses;
    both need integration of sampled values and the matching test-function
    vectors for the adjoint right-hand sides.
    """

    def __init__(self, points, weights, interval):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.interval = interval

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def inner(self, fa, fb) -> float:
        return self.integrate(np.asarray(fa(self.points)) * np.asarray(fb(self.points)))

    def norm(self, fa) -> float:
        v = np.asarray(fa(self.points))
        return float(np.sqrt(self.integrate(v * v)))

    def dg_test_vector(self, mesh: Mesh1D, values) -> np.ndarray:
        """Vector of sum_q w_q r(x_q) phi_j(x_q) over all DG dofs of ``mesh``."""
        out = np.zeros(2 * mesh.n_elements)
        e = mesh.element_of(self.points)
        a, b = mesh.nodes[e], mesh.nodes[e + 1]
        t = (self.points - a) / (b - a)
        wv = self.weights * np.asarray(values)
        np.add.at(out, 2 * e, wv * (1.0 - t))
        np.add.at(out, 2 * e + 1, wv * t)
        return out

    def cg_test_vector(self, mesh: Mesh1D, values) -> np.ndarray:
        out = np.zeros(mesh.nodes.size)
        e = mesh.element_of(self.points)
        a, b = mesh.nodes[e], mesh.nodes[e + 1]
        t = (self.points - a) / (b - a)
        wv = self.weights * np.asarray(values)
        np.add.at(out, e, wv * (1.0 - t))
        np.add.at(out, e + 1, wv * t)
        return out


def merged_gauss_rule(interval, *meshes) -> PointRule:
    """Gauss rule on the merged breakpoint partition of the given meshes.

    Exact for products of piecewise-linear fields from either mesh
    (order-3 Gauss per merged cell).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if hi - lo <= 0:
        return PointRule(np.empty(0), np.empty(0), (lo, hi))
    cuts = np.array([lo, hi])
    for m in meshes:
        inner = m.nodes[(m.nodes > lo + 1e-14) & (m.nodes < hi - 1e-14)]
        cuts = np.concatenate([cuts, inner])
    cuts = np.unique(cuts)
    mid = 0.5 * (cuts[:-1] + cuts[1:])
    half = 0.5 * np.diff(cuts)
    points = (mid[:, None] + half[:, None] * _GL3[0]).ravel()
    weights = (half[:, None] * _GL3[1]).ravel()
    return PointRule(points, weights, (lo, hi))


def nodal_trapezoid_rule(interval, mesh: Mesh1D, clip_high: float) -> PointRule:
    """Composite trapezoid rule over the cells of ``mesh`` clipped to
    ``interval`` (the last cell may be partial).

    The sample points are the cell endpoints; a discontinuous field
    evaluated there resolves to the element on the right of each node
    (half-open convention).  Points are nudged below ``clip_high`` so the
    final endpoint stays inside the evaluated mesh.
    """
    lo, hi = float(interval[0]), float(interval[1])
    inside = (mesh.nodes >= lo - 1e-12) & (mesh.nodes <= hi + 1e-12)
    nodes = np.unique(np.concatenate([mesh.nodes[inside], [lo, hi]]))
    if nodes.size < 2:
        return PointRule(np.empty(0), np.empty(0), (lo, hi))
    weights = np.zeros(nodes.size)
    gaps = np.diff(nodes)
    weights[:-1] += 0.5 * gaps
    weights[1:] += 0.5 * gaps
    points = np.minimum(nodes, clip_high - 1e-13)
    return PointRule(points, weights, (lo, hi))


def overlap_inner_product(a, b, overlap) -> float:
    """Exact L2 inner product of two piecewise-linear fields on ``overlap``."""
    return merged_gauss_rule(overlap, a.mesh, b.mesh).inner(a, b)
