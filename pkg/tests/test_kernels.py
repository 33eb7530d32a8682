import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltn.kernels import (DivergentIntegralError, KernelSpec, evaluate,
                         horizon_mass, verify_kernel_assumptions)

GAMMA_I = KernelSpec("integrable", 0.1)
GAMMA_S = KernelSpec("singular", 0.1)


def test_pointwise_formulas():
    assert evaluate(GAMMA_I, 0.0, 0.05) == pytest.approx(1500.0)
    assert evaluate(GAMMA_I, 0.0, 0.2) == 0.0
    assert evaluate(GAMMA_S, 0.0, 0.05) == pytest.approx(2000.0)
    assert evaluate(GAMMA_S, 0.0, 0.2) == 0.0


def test_singular_diagonal_is_marked():
    assert evaluate(GAMMA_S, 0.3, 0.3) == math.inf


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        KernelSpec("gaussian", 0.1)
    with pytest.raises(ValueError):
        KernelSpec("integrable", -0.1)


@given(st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=200, deadline=None)
def test_symmetry_exact(x, y):
    assert evaluate(GAMMA_I, x, y) == evaluate(GAMMA_I, y, x)
    assert evaluate(GAMMA_S, x, y) == evaluate(GAMMA_S, y, x)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10))
@settings(max_examples=200, deadline=None)
def test_translation_invariance(x, y, c):
    assert evaluate(GAMMA_I, x, y) == evaluate(GAMMA_I, x + c, y + c)
    assert evaluate(GAMMA_S, x, y) == evaluate(GAMMA_S, x + c, y + c)


def test_compact_support_on_random_pairs():
    rng = np.random.default_rng(7)
    x = rng.uniform(-2, 2, 10_000)
    y = x + rng.uniform(0.1, 3.0, 10_000) * rng.choice([-1.0, 1.0], 10_000)
    vals = evaluate(GAMMA_I, x, y)
    assert np.all(vals[np.abs(x - y) >= 0.1] == 0.0)


def test_horizon_mass_constant_kernel():
    # full ball inside the region: 2 eps * 3/(2 eps^3) = 3/eps^2
    assert horizon_mass(GAMMA_I, 0.5, (0.4, 0.6)) == pytest.approx(300.0, rel=1e-12)
    # half ball by symmetry
    assert horizon_mass(GAMMA_I, 0.5, (0.5, 0.6)) == pytest.approx(150.0, rel=1e-12)


def test_full_ball_mass_matches_analytic():
    for eps in (0.01, 0.065, 0.2):
        k = KernelSpec("integrable", eps)
        mass = horizon_mass(k, 0.5, (0.5 - eps, 0.5 + eps))
        assert mass == pytest.approx(3.0 / eps**2, rel=1e-12)


def test_singular_mass_divergence_flagged():
    with pytest.raises(DivergentIntegralError):
        horizon_mass(GAMMA_S, 0.5, (0.4, 0.6))
    with pytest.raises(DivergentIntegralError):
        horizon_mass(GAMMA_S, 0.4, (0.4, 0.6))  # endpoint is still divergent


def test_singular_mass_outside_region():
    # analytic log integral against a region strictly right of x
    val = horizon_mass(GAMMA_S, 0.0, (0.02, 0.5))
    assert val == pytest.approx((1.0 / 0.1**2) * math.log(0.1 / 0.02), rel=1e-12)


def test_assumption_report_integrable():
    eps = 0.065
    rep = verify_kernel_assumptions(KernelSpec("integrable", eps), (-eps, 1 + eps),
                                    samples=101)
    assert rep.gamma0 > 0
    assert rep.square_integrable
    # sampled minimum is the half-ball mass at the domain ends
    assert rep.gamma0 == pytest.approx(1.5 / eps**2, rel=1e-12)
    assert rep.gamma1 == pytest.approx(3.0 / eps**2, rel=1e-12)
    assert rep.gamma2 == pytest.approx(math.sqrt(4.5 / eps**5), rel=1e-10)
    assert rep.satisfied


def test_assumption_report_singular():
    rep = verify_kernel_assumptions(KernelSpec("singular", 0.065), (-0.065, 1.065),
                                    samples=50)
    assert not rep.square_integrable
    assert rep.gamma2 is None
    assert not rep.satisfied


def test_samples_validated():
    with pytest.raises(ValueError):
        verify_kernel_assumptions(GAMMA_I, (0, 1), samples=0)
