import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kppwaves.errors import ExponentMismatch, SpecViolation
from kppwaves.problem import (CompositeNonlinearity, DiffusionPrimitive, PowerLaw, ProblemSpec,
                              chebyshev_grid, composite, compute_mu, growth_rate_condition,
                              validate_spec)


def test_classical_kpp_validates():
    spec = ProblemSpec.from_expressions("1", "r*(1-r)", gamma0=1, delta0=0, gamma1=1, delta1=0)
    report = validate_spec(spec)
    assert report.passed
    assert any("H1" in name for name, _, _ in report.checks)


def test_exact_case_validates(exact_spec):
    assert validate_spec(exact_spec).passed


def test_negative_diffusion_rejected():
    spec = ProblemSpec.from_expressions("-1", "r*(1-r)", gamma0=1, delta0=0, gamma1=1, delta1=0)
    with pytest.raises(SpecViolation, match="d must be positive"):
        validate_spec(spec)


@pytest.mark.parametrize("d, g, fragment", [
    ("1", "r*(1-r) + 0.1", "vanish"),
    ("1", "r*(1-r)*(r - 0.5)", "g must be positive"),
])
def test_reaction_hypotheses(d, g, fragment):
    spec = ProblemSpec.from_expressions(d, g, gamma0=1, delta0=0, gamma1=1, delta1=0)
    with pytest.raises(SpecViolation, match=fragment):
        validate_spec(spec)


def test_parameter_restrictions():
    spec = ProblemSpec.from_expressions("r**(-1.5)", "r*(1-r)", gamma0=1, delta0=-1.5,
                                        gamma1=1, delta1=0)
    with pytest.raises(SpecViolation, match="delta0 > -1"):
        validate_spec(spec)


def test_exponent_mismatch():
    spec = ProblemSpec.from_expressions("r", "r*(1-r)", gamma0=1, delta0=0, gamma1=1, delta1=0)
    with pytest.raises(ExponentMismatch, match="d0"):
        validate_spec(spec)


def test_sample_count_precondition(exact_spec):
    with pytest.raises(ValueError):
        validate_spec(exact_spec, samples=8)


def test_chebyshev_grid_excludes_endpoints():
    r = chebyshev_grid(64)
    assert r[0] > 0 and r[-1] < 1 and np.all(np.diff(r) > 0)


@pytest.mark.parametrize("spec, sigma0, sigma1, f_half", [
    (ProblemSpec.power(1, 1, 1, 0), 2.0, 1.0, 0.125),
    (ProblemSpec.power(1, 0, 1, 0), 1.0, 1.0, 0.25),
    (ProblemSpec.from_expressions("r**(-0.5)", "r*(1-r)", gamma0=1, delta0=-0.5,
                                  gamma1=1, delta1=0), 0.5, 1.0, 0.25 * math.sqrt(2)),
])
def test_composite(spec, sigma0, sigma1, f_half):
    f = composite(spec)
    assert (f.sigma0, f.sigma1, f.f0, f.f1) == (sigma0, sigma1, 1.0, 1.0)
    assert f(0.5) == pytest.approx(f_half, rel=1e-14)


@pytest.mark.parametrize("f, mu", [
    (CompositeNonlinearity.power(1, 1), 1.0),
    (CompositeNonlinearity.power(2, 1), 0.25),
    (CompositeNonlinearity.power(0.5, 1), math.inf),
])
def test_mu_examples(f, mu):
    assert compute_mu(f) == pytest.approx(mu, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(1.01, 20.0))
def test_mu_scales_linearly(sigma0, sigma1, coef, lam):
    f = CompositeNonlinearity.power(sigma0, sigma1, coef)
    g = CompositeNonlinearity.power(sigma0, sigma1, coef * lam)
    mu, mu_scaled = compute_mu(f), compute_mu(g)
    if sigma0 < 1:
        assert math.isinf(mu) and math.isinf(mu_scaled)
    else:
        assert mu_scaled == pytest.approx(lam * mu, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 4.0), st.floats(0.05, 4.0))
def test_mu_infinite_iff_sigma0_below_one(sigma0, sigma1):
    assert math.isinf(compute_mu(CompositeNonlinearity.power(sigma0, sigma1))) == (sigma0 < 1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-0.8, 2.0), st.floats(0.2, 3.0), st.floats(-0.8, 2.0))
def test_sampled_limit_at_zero(g0e, d0e, g1e, d1e):
    if g0e + d0e <= 0 or g1e + d1e <= 0:
        return
    f = composite(ProblemSpec.power(g0e, d0e, g1e, d1e))
    for t in (1e-4, 1e-5):
        assert f(t) / t**f.sigma0 == pytest.approx(f.f0, rel=0.05)


def test_mu_brute_force_oracle():
    # f/r = (1 + 4r)(1 - r) peaks inside, at r = 3/8, with value 25/16
    spec = ProblemSpec.from_expressions("1 + 4*r", "r*(1-r)", gamma0=1, delta0=0,
                                        gamma1=1, delta1=0, d1=5)
    f = composite(spec)
    r = np.linspace(1e-7, 1 - 1e-7, 2_000_001)
    assert compute_mu(f) == pytest.approx(np.max(f(r) / r), rel=1e-8)
    assert compute_mu(f) == pytest.approx(25 / 16, rel=1e-10)


def test_growth_rate_condition():
    f = CompositeNonlinearity.power(1, 1)
    delta = 0.1
    inf_ratio = 1 - delta
    assert growth_rate_condition(f, math.sqrt(inf_ratio) * 0.999, delta)
    assert not growth_rate_condition(f, 1.01, delta)
    with pytest.raises(ValueError):
        growth_rate_condition(f, 1.0, 1.5)


@pytest.mark.parametrize("spec, exact", [
    (ProblemSpec.power(1, 1, 1, 0), lambda u: u**2 / 2),
    (ProblemSpec.power(1, 0, 1, 0), lambda u: u),
    (ProblemSpec.power(1, -0.5, 1, 0), lambda u: 2 * np.sqrt(u)),
    (ProblemSpec.power(1, 0, 1, -0.5), lambda u: 2 - 2 * np.sqrt(1 - u)),
])
def test_diffusion_primitive(spec, exact):
    D = DiffusionPrimitive(spec)
    u = np.linspace(0, 1, 1001)
    tol = 1e-9 if min(spec.delta0, spec.delta1) >= 0 else 2e-3
    np.testing.assert_allclose(D(u), exact(u), atol=tol)
    assert np.all(np.diff(D(u)) >= 0)
    assert D(1.5) == D(1.0) and D(-1.0) == 0.0


def test_power_law_describe_and_equality():
    p = PowerLaw(2, 1, 0.5)
    assert p == PowerLaw(2.0, 1.0, 0.5) and hash(p) == hash(PowerLaw(2, 1, 0.5))
    assert p.describe()["exponent1"] == 0.5
    assert p(0.75) == pytest.approx(2 * 0.75 * 0.5)
