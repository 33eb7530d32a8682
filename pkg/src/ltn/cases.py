"""Named test cases: manufactured data, forcings and exact solutions.

The polynomial cases (patch, m1, m2) carry manufactured solutions the
nonlocal operator reproduces exactly, so both models share one exact
solution and the controls' exact values are its traces.  The singular-
feature cases (a1: point force; a2: forcing with a log blow-up at 1/2)
have no closed-form error reference; the harness checks them by
self-convergence against a finer mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fem_assembly import DiracAt, PiecewiseFormula, SmoothFunction

CASE_NAMES = ("patch", "m1", "m2", "a1", "a2")


@dataclass(frozen=True)
class CaseData:
    name: str
    f_n: object
    f_l: object
    eta_D_data: object          # callable or None (homogeneous)
    gamma_D_value: float
    exact: object               # callable or None


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def a2_forcing(epsilon: float):
    """Forcing with integrable log singularities at 1/2 and at 1/2 +- eps."""
    eps = float(epsilon)
    log_eps = math.log(eps)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        left = (x >= 0.5 - eps) & (x < 0.5)
        xl = x[left]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[left] = -(2.0 / eps) * (
                0.5 * eps**2 - eps + 0.375
                + (2.0 * eps - 1.5 - log_eps) * xl
                + (1.5 + log_eps) * xl**2
                - np.log(0.5 - xl) * (xl**2 - xl))
        right = (x >= 0.5) & (x < 0.5 + eps)
        xr = x[right]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[right] = -(2.0 / eps) * (
                0.5 * eps**2 - eps - 0.375
                + (2.0 * eps + 1.5 + log_eps) * xr
                - (1.5 + log_eps) * xr**2
                - np.log(xr - 0.5) * (xr**2 - xr))
        return out

    return PiecewiseFormula(f, breakpoints=(0.5 - eps, 0.5, 0.5 + eps))


def make_case(name: str, epsilon: float) -> CaseData:
    name = name.lower()
    if name == "patch":
        exact = lambda x: np.asarray(x, dtype=float)
        return CaseData("patch", SmoothFunction(_zero), SmoothFunction(_zero),
                        eta_D_data=exact, gamma_D_value=1.75, exact=exact)
    if name == "m1":
        exact = lambda x: np.asarray(x, dtype=float) ** 2
        f = SmoothFunction(lambda x: np.full_like(np.asarray(x, dtype=float), -2.0))
        return CaseData("m1", f, f, eta_D_data=exact, gamma_D_value=1.75**2, exact=exact)
    if name == "m2":
        exact = lambda x: np.asarray(x, dtype=float) ** 3
        f = SmoothFunction(lambda x: -6.0 * np.asarray(x, dtype=float))
        return CaseData("m2", f, f, eta_D_data=exact, gamma_D_value=1.75**3, exact=exact)
    if name == "a1":
        return CaseData("a1", DiracAt(0.25), SmoothFunction(_zero),
                        eta_D_data=None, gamma_D_value=0.0, exact=None)
    if name == "a2":
        f = a2_forcing(epsilon)
        return CaseData("a2", f, f, eta_D_data=None, gamma_D_value=0.0, exact=None)
    raise ValueError(f"unknown case {name!r}; expected one of {CASE_NAMES}")
