"""Domain decomposition and mesh construction for the 1D coupled problem.

The configuration couples a nonlocal subdomain Omega_n = (-eps, 1+eps),
whose interaction layers are eta_D = (-eps, 0) (fixed homogeneous or given
data) and eta_c = (1, 1+eps) (virtual control), with a local subdomain
Omega_l = (0.75, 1.75) carrying a control value at gamma_c = 0.75 and given
data at gamma_D = 1.75.  The two models overlap on Omega_o = (0.75, 1+eps).

Interior regions are subdivided uniformly (max(1, round(length/h))
elements per subinterval, which is exactly h for the dyadic grid sizes the
convergence tables use).  The eps-thin interaction layers are meshed by
marching in steps of h away from their interface with omega_n, leaving the
remainder as a short element at the outer end; the layer grid therefore
lines up with the local grid inside the overlap.  All interface points are
exact nodes of their meshes and the local mesh always carries a node at
the control-layer interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SNAP_TOL = 1e-12


@dataclass(frozen=True)
class DomainLayout:
    """Intervals and points of the coupled configuration."""

    epsilon: float
    omega: tuple            # global interior
    eta: tuple              # pair of interaction layers of omega
    omega_n: tuple          # interior of the nonlocal subdomain
    eta_D: tuple            # data layer of the nonlocal subdomain
    eta_c: tuple            # control layer of the nonlocal subdomain
    omega_l: tuple          # local subdomain
    gamma_D: float          # local data boundary point
    gamma_c: float          # local control boundary point
    overlap: tuple          # Omega_o = Omega_n ∩ Omega_l

    @property
    def domain_n(self) -> tuple:
        """Full nonlocal subdomain eta_D ∪ omega_n ∪ eta_c."""
        return (self.eta_D[0], self.eta_c[1])

    @property
    def kappa(self) -> float:
        """Overlap thickness |Omega_o|."""
        return self.overlap[1] - self.overlap[0]

    def validate(self):
        eps = self.epsilon
        if not eps > 0:
            raise ValueError("epsilon must be positive")
        for name, (a, b) in (("eta_D", self.eta_D), ("eta_c", self.eta_c)):
            if abs((b - a) - eps) > SNAP_TOL:
                raise ValueError(f"{name} width {b - a} != epsilon {eps}")
        if self.kappa <= 0:
            raise ValueError("overlap is empty")
        if not (self.omega_n[0] < self.gamma_c < self.omega_n[1]):
            raise ValueError("gamma_c must lie strictly inside omega_n")
        if not (self.omega_l[0] <= self.eta_c[0] and self.eta_c[1] <= self.omega_l[1]):
            raise ValueError("eta_c must be contained in omega_l")
        return self


def standard_layout(epsilon: float) -> DomainLayout:
    """The test configuration used throughout: omega = (0, 1), overlap right."""
    if not 0.0 < epsilon < 0.25:
        raise ValueError(f"epsilon={epsilon} out of range (0, 0.25) for the standard layout")
    eps = float(epsilon)
    return DomainLayout(
        epsilon=eps,
        omega=(0.0, 1.0),
        eta=((-eps, 0.0), (1.0, 1.0 + eps)),
        omega_n=(0.0, 1.0),
        eta_D=(-eps, 0.0),
        eta_c=(1.0, 1.0 + eps),
        omega_l=(0.75, 1.75),
        gamma_D=1.75,
        gamma_c=0.75,
        overlap=(0.75, 1.0 + eps),
    ).validate()


@dataclass(frozen=True)
class Mesh1D:
    """Sorted nodes; element k spans [nodes[k], nodes[k+1])."""

    nodes: np.ndarray
    h: float                      # nominal grid size the mesh was built for

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("mesh nodes must be strictly increasing")

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def span(self) -> tuple:
        return (float(self.nodes[0]), float(self.nodes[-1]))

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    def element_of(self, x) -> np.ndarray:
        """Element index containing x, half-open convention, last closed."""
        idx = np.searchsorted(self.nodes, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.n_elements - 1)

    def node_index(self, x: float) -> int:
        """Index of the node at coordinate x (within snap tolerance)."""
        i = int(np.argmin(np.abs(self.nodes - x)))
        if abs(self.nodes[i] - x) > SNAP_TOL:
            raise ValueError(f"{x} is not a node of this mesh")
        return i

    def elements_within(self, interval) -> np.ndarray:
        """Indices of elements contained in [interval[0], interval[1]]."""
        lo, hi = interval
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return np.nonzero((mids > lo) & (mids < hi))[0]


def _segment_nodes(breakpoints, h: float) -> np.ndarray:
    """Uniform subdivision of each segment; interface points are exact."""
    pieces = [np.array([breakpoints[0]])]
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        n = max(1, round((b - a) / h))
        interior = a + (b - a) * np.arange(1, n) / n
        pieces.append(np.concatenate([interior, [b]]))
    return np.concatenate(pieces)


def layer_nodes(interface: float, outer: float, h: float) -> np.ndarray:
    """Layer mesh marched in h-steps from the interface, remnant at the end."""
    width = abs(outer - interface)
    sgn = 1.0 if outer > interface else -1.0
    n = int(width / h + SNAP_TOL)
    xs = [interface + sgn * h * j for j in range(n + 1)]
    if width - n * h > SNAP_TOL:
        xs.append(outer)
    else:
        xs[-1] = outer
    return np.sort(np.array(xs))


def build_interval_mesh(breakpoints, h: float) -> Mesh1D:
    """Mesh an interval given its interior interface points."""
    if h <= 0:
        raise ValueError("h must be positive")
    bps = sorted(float(b) for b in breakpoints)
    if any(b2 - b1 <= SNAP_TOL for b1, b2 in zip(bps[:-1], bps[1:])):
        raise ValueError(f"degenerate breakpoints {bps}")
    return Mesh1D(_segment_nodes(bps, h), h=h)


def build_meshes(layout: DomainLayout, h: float) -> tuple:
    """Aligned meshes for the nonlocal and local subdomains.

    The nominal size must not exceed the smallest non-layer segment of the
    layout (the eps-thin layers always receive at least one element, so a
    coarse h never leaves the control region meshless).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    eps = layout.epsilon
    segs = [(layout.eta_D[1], layout.gamma_c), (layout.gamma_c, layout.eta_c[0]),
            (layout.omega_l[0], layout.eta_c[0]), (layout.eta_c[0], layout.omega_l[1])]
    limit = min(b - a for a, b in segs)
    if h > limit + SNAP_TOL:
        raise ValueError(f"h={h} exceeds the smallest layout segment ({limit}); "
                         "refine h or widen the layout")
    nodes_n = np.unique(np.concatenate([
        layer_nodes(layout.eta_D[1], layout.eta_D[0], h),
        _segment_nodes([layout.omega_n[0], layout.gamma_c, layout.omega_n[1]], h),
        layer_nodes(layout.eta_c[0], layout.eta_c[1], h),
    ]))
    nodes_l = _segment_nodes([layout.omega_l[0], layout.eta_c[0], layout.omega_l[1]], h)
    return Mesh1D(nodes_n, h=h), Mesh1D(nodes_l, h=h)


def parse_grid_size(text) -> float:
    """Grid sizes given either as floats or as exact '2^-k' literals."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if "^" in s:
        base, expo = s.split("^", 1)
        return float(base) ** float(expo)
    return float(s)
