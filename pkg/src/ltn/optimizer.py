"""Reduced-space optimization of the overlap mismatch.

The controls are the volume-constraint values on the control layer (DG
trace, two dofs per control element) plus the scalar boundary value at the
local control point.  The objective

    J(theta) = 1/2 || u_n(theta_n) - u_l(theta_l) ||^2_{overlap}

is quadratic; its unique minimizer is computed either by the explicit
normal equations (harmonic lifting of each control basis function, Gram
matrix on the overlap - the deterministic path used for table generation)
or by full-memory BFGS with a strong-Wolfe line search and adjoint-based
gradients (the iterative path, kept as a cross-check of the optimality
system).

The mismatch norm is discretized by the trapezoidal rule at the local-grid
nodes lying in the overlap, with the discontinuous field resolved on the
right of each node.  Benchmarked against the published convergence tables,
this nodal functional - not the exact merged-mesh integral, which is kept
for error norms and diagnostics - reproduces the reference error values;
the two quadratures agree as h -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fem_assembly import (CgField, DgField, assemble_load, merged_gauss_rule,
                           nodal_trapezoid_rule)
from .geometry import DomainLayout, build_meshes
from .kernels import KernelSpec
from .state_solvers import (LocalOperator, NonlocalOperator, StatePair,
                            constrained_data_vector)


@dataclass
class ControlPair:
    """theta_n: DG coefficients on the control-layer mesh; theta_l: scalar."""

    theta_n: np.ndarray
    theta_l: float

    def pack(self) -> np.ndarray:
        return np.append(np.asarray(self.theta_n, dtype=float), self.theta_l)

    @staticmethod
    def unpack(vec) -> "ControlPair":
        vec = np.asarray(vec, dtype=float)
        return ControlPair(vec[:-1].copy(), float(vec[-1]))

    def norm(self, control_mass: np.ndarray) -> float:
        """Control-space norm: L2 on the control layer plus |theta_l|."""
        tn = np.asarray(self.theta_n)
        return float(np.sqrt(tn @ control_mass @ tn + self.theta_l**2))


@dataclass
class ObjectiveEval:
    value: float
    gradient: np.ndarray
    states: StatePair


@dataclass
class LtnSolution:
    """Spliced coupled solution with its optimal controls and solver report."""

    states: StatePair
    control: ControlPair
    layout: DomainLayout
    report: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        cut = self.layout.eta_c[1]  # nonlocal branch owns the overlap and its end
        vals = np.where(x <= cut,
                        self.states.nonlocal_state(np.minimum(x, cut)),
                        self.states.local_state(np.maximum(x, cut)))
        return float(vals) if vals.ndim == 0 else vals


def splice(states: StatePair, layout: DomainLayout, control=None, report=None) -> LtnSolution:
    return LtnSolution(states, control, layout, report or {})


class CoupledProblem:
    """States, loads and overlap quadrature for one coupled configuration."""

    def __init__(self, layout: DomainLayout, kernel: KernelSpec, h: float,
                 f_n=None, f_l=None, eta_D_data=None, gamma_D_value: float = 0.0,
                 backend=None, objective_rule: str = "nodal"):
        self.layout = layout
        self.kernel = kernel
        self.h = h
        self.mesh_n, self.mesh_l = build_meshes(layout, h)
        self.op_n = NonlocalOperator(self.mesh_n, kernel, layout.omega_n, backend=backend)
        self.op_l = LocalOperator(self.mesh_l, layout.gamma_c, layout.gamma_D)
        # "nodal" is the benchmark-anchored objective; "exact" integrates the
        # mismatch exactly on the merged partition and identifies every
        # control dof directly (preferable for wide control layers).
        self.overlap_rule = merged_gauss_rule(layout.overlap, self.mesh_n, self.mesh_l)
        if objective_rule == "nodal":
            self.quad = nodal_trapezoid_rule(layout.overlap, self.mesh_l,
                                             clip_high=self.mesh_n.span[1])
        elif objective_rule == "exact":
            self.quad = self.overlap_rule
        else:
            raise ValueError(f"unknown objective rule {objective_rule!r}")

        self.control_elements = self.mesh_n.elements_within(layout.eta_c)
        self.control_dofs = np.stack([2 * self.control_elements,
                                      2 * self.control_elements + 1], axis=1).ravel()
        self.n_controls = self.control_dofs.size + 1

        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
        self.b_n = assemble_load(self.mesh_n, "DG", f_n if f_n is not None else zero,
                                 region=layout.omega_n)
        self.b_l = assemble_load(self.mesh_l, "CG", f_l if f_l is not None else zero,
                                 region=layout.omega_l)
        self.g_data = constrained_data_vector(
            self.mesh_n, [(layout.eta_D, eta_D_data)] if eta_D_data is not None else [])
        self.gamma_D_value = float(gamma_D_value)
        self._lift_cache = {}

    # -- state solves --------------------------------------------------

    def control_vector(self, c) -> np.ndarray:
        c = c.pack() if isinstance(c, ControlPair) else np.asarray(c, dtype=float)
        if c.shape != (self.n_controls,):
            raise ValueError(f"expected {self.n_controls} control dofs, got {c.shape}")
        return c

    def zero_control(self) -> np.ndarray:
        return np.zeros(self.n_controls)

    def solve_states(self, c, homogeneous: bool = False) -> StatePair:
        """Full states (or, with homogeneous=True, zero-data harmonic parts)."""
        c = self.control_vector(c)
        g = np.zeros_like(self.g_data) if homogeneous else self.g_data.copy()
        g[self.control_dofs] = c[:-1]
        b_n = np.zeros_like(self.b_n) if homogeneous else self.b_n
        b_l = np.zeros_like(self.b_l) if homogeneous else self.b_l
        gD = 0.0 if homogeneous else self.gamma_D_value
        u_n = self.op_n.solve(b_n, g)
        u_l = self.op_l.solve(b_l, c[-1], gD)
        return StatePair(u_n, u_l)

    def harmonic_states(self, c) -> StatePair:
        return self.solve_states(c, homogeneous=True)

    def homogeneous_states(self) -> StatePair:
        return self.solve_states(self.zero_control())

    def mismatch_values(self, states: StatePair, rule=None) -> np.ndarray:
        pts = (rule or self.quad).points
        return states.nonlocal_state(pts) - states.local_state(pts)

    # -- objective / gradient -------------------------------------------

    def objective_and_gradient(self, c) -> ObjectiveEval:
        c = self.control_vector(c)
        states = self.solve_states(c)
        r = self.mismatch_values(states)
        value = 0.5 * self.quad.integrate(r * r)

        g_n = self.quad.dg_test_vector(self.mesh_n, r)
        g_l = -self.quad.cg_test_vector(self.mesh_l, r)
        z_n = self.op_n.solve_adjoint_free(g_n[self.op_n.free])
        z_l = self.op_l.solve_adjoint_free(g_l[self.op_l.free])

        A = self.op_n.matrix
        grad_n = g_n[self.control_dofs] - A[np.ix_(self.control_dofs, self.op_n.free)] @ z_n
        K = self.op_l.matrix
        grad_l = g_l[self.op_l.node_c] - K[self.op_l.node_c, self.op_l.free] @ z_l
        return ObjectiveEval(value, np.append(grad_n, grad_l), states)

    # -- normal equations ------------------------------------------------

    def _liftings(self, rule=None):
        """Mismatch of the harmonic lifting of each control basis function."""
        rule = rule or self.quad
        key = id(rule)
        if key in self._lift_cache:
            return self._lift_cache[key]
        pts = rule.points
        m = self.n_controls
        D = np.zeros((m, pts.size))
        # nonlocal control basis columns, batched through one factorization
        G = np.zeros((2 * self.mesh_n.n_elements, m - 1))
        G[self.control_dofs, np.arange(m - 1)] = 1.0
        rhs = -self.op_n._A_fc @ G[self.op_n.constrained, :]
        U = self.op_n.solve_adjoint_free(rhs)
        for k in range(m - 1):
            coeffs = G[:, k].copy()
            coeffs[self.op_n.free] = U[:, k]
            D[k] = DgField(self.mesh_n, coeffs)(pts)
        v_l = self.op_l.solve(np.zeros_like(self.b_l), 1.0, 0.0)
        D[m - 1] = -v_l(pts)
        self._lift_cache[key] = D
        return D

    def normal_system(self, rule=None):
        """Gram matrix and right-hand side of the optimality system."""
        rule = rule or self.quad
        D = self._liftings(rule)
        W = rule.weights
        Q = (D * W) @ D.T
        d0 = self.mismatch_values(self.homogeneous_states(), rule)
        F = -(D * W) @ d0
        return Q, F

    def harmonic_mismatch_parts(self, c, rule=None):
        """(nonlocal lifting, local lifting) values at the rule points."""
        rule = rule or self.quad
        c = self.control_vector(c)
        D = self._liftings(rule)
        v_n = c[:-1] @ D[:-1]
        v_l = -c[-1] * D[-1]
        return v_n, v_l


def solve_normal_equations(problem: CoupledProblem) -> LtnSolution:
    """Direct solve of the optimality system.

    The Gram matrix is assembled and checked for positive definiteness
    (it is an inner product whenever the overlap functional separates the
    controls; a failure here flags a degenerate configuration).  The
    minimizer itself is computed by QR least squares on the weighted
    lifting matrix, whose condition number is the square root of the Gram
    matrix's; weakly observed control dofs are then resolved to near
    machine precision, which the patch test relies on.
    """
    Q, F = problem.normal_system()
    try:
        cho_factor(Q, lower=True)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("optimality system is not SPD (degenerate overlap "
                           "or assembly bug)") from exc
    D = problem._liftings()
    sqw = np.sqrt(problem.quad.weights)
    d0 = problem.mismatch_values(problem.homogeneous_states())
    c, *_ = np.linalg.lstsq((D * sqw).T, -sqw * d0, rcond=None)
    states = problem.solve_states(c)
    r = problem.mismatch_values(states)
    control = ControlPair.unpack(c)
    report = {
        "solver": "normal",
        "objective": 0.5 * problem.quad.integrate(r * r),
        "condition_estimate": float(np.linalg.cond(Q)),
        "iterations": 1,
        "gradient_norm": float(np.max(np.abs(Q @ c - F))),
    }
    return LtnSolution(states, control, problem.layout, report)


class LineSearchError(RuntimeError):
    """Strong-Wolfe search failed; the last iterate is attached."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


def _strong_wolfe(fg, x, p, f0, g0, c1=1e-4, c2=0.9, alpha0=1.0, max_bracket=30):
    """Strong Wolfe line search (bracket and zoom with bisection-safeguarded
    quadratic interpolation).  Returns (alpha, f, grad) at the accepted point."""
    d0 = float(g0 @ p)
    if d0 >= 0:
        raise LineSearchError("not a descent direction")

    def phi(alpha):
        f, g = fg(x + alpha * p)
        return f, g, float(g @ p)

    def zoom(lo, f_lo, d_lo, hi, f_hi):
        for _ in range(60):
            alpha = 0.5 * (lo + hi)
            if abs(hi - lo) < 1e-18 * max(1.0, abs(lo)):
                f, g, _ = phi(alpha)
                return alpha, f, g
            f, g, d = phi(alpha)
            if f > f0 + c1 * alpha * d0 or f >= f_lo:
                hi, f_hi = alpha, f
            else:
                if abs(d) <= -c2 * d0:
                    return alpha, f, g
                if d * (hi - lo) >= 0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, d_lo = alpha, f, d
        f, g, _ = phi(lo)
        return lo, f, g

    alpha_prev, f_prev, d_prev = 0.0, f0, d0
    alpha = alpha0
    for _ in range(max_bracket):
        f, g, d = phi(alpha)
        if f > f0 + c1 * alpha * d0 or (alpha_prev > 0 and f >= f_prev):
            return zoom(alpha_prev, f_prev, d_prev, alpha, f)
        if abs(d) <= -c2 * d0:
            return alpha, f, g
        if d >= 0:
            return zoom(alpha, f, d, alpha_prev, f_prev)
        alpha_prev, f_prev, d_prev = alpha, f, d
        alpha *= 2.0
    raise LineSearchError("bracketing failed")


def solve_bfgs(problem: CoupledProblem, x0=None, tol: float = 1e-12,
               max_iter: int = 500, c1: float = 1e-4, c2: float = 0.9) -> LtnSolution:
    """Full-memory BFGS from theta = 0 with adjoint gradients."""
    n = problem.n_controls
    x = problem.zero_control() if x0 is None else problem.control_vector(x0)

    evals = [0]

    def fg(v):
        evals[0] += 1
        ev = problem.objective_and_gradient(v)
        return ev.value, ev.gradient

    f, g = fg(x)
    H = np.eye(n)
    it = 0
    status = "converged"
    while np.max(np.abs(g)) > tol and it < max_iter:
        p = -H @ g
        try:
            alpha, f_new, g_new = _strong_wolfe(fg, x, p, f, g, c1=c1, c2=c2)
        except LineSearchError as exc:
            status = f"line search failed: {exc}"
            break
        s = alpha * p
        y = g_new - g
        x = x + s
        f, g = f_new, g_new
        sy = float(s @ y)
        if sy > 0:
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        it += 1

    states = problem.solve_states(x)
    control = ControlPair.unpack(x)
    report = {
        "solver": "bfgs",
        "objective": float(f),
        "iterations": it,
        "gradient_norm": float(np.max(np.abs(g))),
        "evaluations": evals[0],
        "status": status,
    }
    sol = LtnSolution(states, control, problem.layout, report)
    if status.startswith("line search"):
        raise LineSearchError(status, solution=sol)
    return sol
