"""Radial interaction kernels for the nonlocal diffusion operator.

Two families are supported on a horizon of radius ``epsilon``:

* ``integrable``:  gamma(x, y) = 3 / (2 eps^3)            for |x - y| < eps
* ``singular``:    gamma(x, y) = 1 / (eps^2 |x - y|)      for 0 < |x - y| < eps

Both vanish identically outside the horizon.  The scaling constants are
fixed so that the induced nonlocal operator agrees with the classical
Laplacian on polynomials up to third degree; they are not user-tunable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INTEGRABLE = "integrable"
SINGULAR = "singular"

_FAMILIES = (INTEGRABLE, SINGULAR)


class DivergentIntegralError(ArithmeticError):
    """Raised when a kernel integral is logarithmically divergent."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus interaction radius."""

    family: str
    epsilon: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; "
                             f"expected one of {_FAMILIES}")
        if not self.epsilon > 0.0:
            raise ValueError(f"interaction radius must be positive, got {self.epsilon}")

    @property
    def is_singular(self) -> bool:
        return self.family == SINGULAR

    @property
    def scale(self) -> float:
        """Multiplicative constant of the kernel formula."""
        if self.family == INTEGRABLE:
            return 1.5 / self.epsilon**3
        return 1.0 / self.epsilon**2


def evaluate(kernel: KernelSpec, x, y):
    """Pointwise kernel value gamma(x, y).

    Accepts scalars or broadcastable arrays.  For the singular family the
    diagonal x == y is a pole: the returned value is ``inf``, a signaling
    marker that quadrature must never have sampled that point.
    """
    r = np.abs(np.asarray(y, dtype=float) - np.asarray(x, dtype=float))
    eps = kernel.epsilon
    inside = r < eps
    if kernel.family == INTEGRABLE:
        out = np.where(inside, kernel.scale, 0.0)
    else:
        with np.errstate(divide="ignore"):
            out = np.where(inside, kernel.scale / r, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def horizon_mass(kernel: KernelSpec, x: float, region) -> float:
    """Integral of gamma(x, .) over ``region`` (clipped to the horizon).

    For the singular family the integral over any region whose closure
    contains ``x`` diverges logarithmically; that request raises
    :class:`DivergentIntegralError` instead of returning a value.
    """
    lo, hi = float(region[0]), float(region[1])
    if hi < lo:
        raise ValueError(f"region endpoints out of order: {region}")
    eps = kernel.epsilon
    a = max(lo, x - eps)
    b = min(hi, x + eps)
    if b <= a:
        return 0.0
    if kernel.family == INTEGRABLE:
        # Constant on the ball; exact under any Gauss rule.  Integrate the
        # two sides of x separately so the grid never straddles the point.
        total = 0.0
        for lo_i, hi_i in ((a, min(b, x)), (max(a, x), b)):
            if hi_i > lo_i:
                nodes, weights = np.polynomial.legendre.leggauss(4)
                mid, half = 0.5 * (hi_i + lo_i), 0.5 * (hi_i - lo_i)
                total += half * float(np.sum(weights * evaluate(kernel, x, mid + half * nodes)))
        return total
    # Singular family: log antiderivative, defined only with x outside [a, b].
    if a <= x <= b:
        raise DivergentIntegralError(
            f"integral of the singular kernel over ({lo}, {hi}) diverges: "
            f"x={x} lies in the region")
    near, far = (abs(a - x), abs(b - x)) if x < a else (abs(b - x), abs(a - x))
    return kernel.scale * math.log(far / near)


@dataclass(frozen=True)
class AssumptionReport:
    """Empirical constants of the kernel integrability conditions."""

    family: str
    epsilon: float
    gamma0: float          # min over samples of int_{Omega ∩ ball} gamma dy
    gamma1: float          # max of the same integrals
    gamma2: float | None   # sup_x sqrt(int gamma^2 dy); None when divergent
    square_integrable: bool

    @property
    def satisfied(self) -> bool:
        return self.gamma0 > 0.0 and self.square_integrable


def verify_kernel_assumptions(kernel: KernelSpec, domain, samples: int = 100) -> AssumptionReport:
    """Sample the kernel-mass bounds over ``domain`` = (lo, hi).

    The singular family has infinite pointwise mass (its lower bound holds
    vacuously) and a non-integrable square, so it is flagged as violating
    the square-integrability condition.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lo, hi = float(domain[0]), float(domain[1])
    xs = np.linspace(lo, hi, samples) if samples > 1 else np.array([0.5 * (lo + hi)])
    if kernel.is_singular:
        return AssumptionReport(kernel.family, kernel.epsilon,
                                gamma0=math.inf, gamma1=math.inf,
                                gamma2=None, square_integrable=False)
    masses = np.array([horizon_mass(kernel, float(x), (lo, hi)) for x in xs])
    # gamma(x,.)^2 is again a scaled indicator; its integral is exact.
    sq = np.array([kernel.scale**2 * (min(hi, x + kernel.epsilon) - max(lo, x - kernel.epsilon))
                   for x in xs])
    return AssumptionReport(kernel.family, kernel.epsilon,
                            gamma0=float(masses.min()), gamma1=float(masses.max()),
                            gamma2=float(np.sqrt(sq.max())), square_integrable=True)
