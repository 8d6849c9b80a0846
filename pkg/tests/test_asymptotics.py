import math

import numpy as np
import pytest
from scipy.special import logit
from scipy.stats import qmc

from kppwaves.asymptotics import (Existence, Region0, Region1, classify, classify_near_0,
                                  classify_near_1, estimate_exponent)
from kppwaves.errors import InsufficientSamples, NoTravellingWave, OutOfDomain
from kppwaves.phase import PhaseSolution, Status, critical_speed, solve_phase
from kppwaves.problem import CompositeNonlinearity, ProblemSpec, composite
from kppwaves.profile import reconstruct_profile


@pytest.mark.parametrize("pair, region, existence", [
    ((0.5, 0), Region0.M01, Existence.NO_WAVE),
    ((1, 1), Region0.M02, Existence.EXISTS),
    ((1, 0), Region0.M02, Existence.EXISTS),
])
def test_near_zero(pair, region, existence):
    assert classify_near_0(*pair) == (region, existence)


@pytest.mark.parametrize("pair, region, finite, theta", [
    ((1, 0), Region1.M12, False, 2.0),
    ((0.5, 1), Region1.M13, True, 3.0),
    ((0.5, 0), Region1.M11, True, 1.5),
    ((2, 0), Region1.M14, False, 4.0),
])
def test_near_one(pair, region, finite, theta):
    assert classify_near_1(*pair) == (region, finite, theta)


@pytest.mark.parametrize("pair", [(0, 1), (1, -1), (0.2, -0.5), (-1, 3)])
def test_out_of_domain(pair):
    with pytest.raises(OutOfDomain):
        classify_near_0(*pair)
    with pytest.raises(OutOfDomain):
        classify_near_1(*pair)


def _by_definition(g, d):
    """Literal set definitions, one flag per region."""
    s = g + d
    return [0 < g < 1 + d and 0 < s <= 1,
            0 < 1 + d <= g and 0 < s <= 1,
            0 < g < 1 and s > 1,
            g >= 1 and d > -1 and s > 1]


def test_partition_of_admissible_quadrant():
    pts = qmc.Sobol(2, seed=7).random(2**14)
    gamma = 4.0 * pts[:, 0] + 1e-9
    delta = -1.0 + 5.0 * pts[:, 1] + 1e-9
    admissible = gamma + delta > 0
    gamma, delta = gamma[admissible][:10_000], delta[admissible][:10_000]
    assert len(gamma) == 10_000
    names = [Region1.M11, Region1.M12, Region1.M13, Region1.M14]
    for g, d in zip(gamma, delta):
        flags = _by_definition(g, d)
        assert sum(flags) == 1
        assert classify_near_1(g, d)[0] is names[flags.index(True)]


def test_report_refuses_z0_without_existence():
    report = classify(0.5, 0, 1, 0)
    assert report.existence is Existence.NO_WAVE and report.z0_finite is None
    report = classify(1, 0, 1, 0)
    assert report.z0_finite is False
    assert "gamma0+delta0=1" in report.borderline
    assert report.as_dict()["region1"] == "M12"


def _synthetic(y_fn, n=2000):
    xi = np.linspace(logit(1e-6), logit(1 - 1e-6), n)
    r = 1 / (1 + np.exp(-xi))
    y = y_fn(r)
    return PhaseSolution(c=1.0, grid=r, y=y, y_at_rmin=float(y[0]), status=Status.REACHED_ZERO,
                         theta=3.0, kappa=1.0, eps_seed=1e-6, r_min=1e-6, xi=xi, log_y=np.log(y))


def test_exponent_of_exact_power_law():
    theta, kappa, r2 = estimate_exponent(_synthetic(lambda r: (1 - r) ** 3))
    assert theta == pytest.approx(3, abs=1e-9)
    assert kappa == pytest.approx(1, abs=1e-8)
    assert r2 == pytest.approx(1, abs=1e-12)


def test_exponent_exact_case(exact_phase):
    theta, kappa, _ = estimate_exponent(exact_phase, (0.99, 0.999999))
    assert theta == pytest.approx(2.0, abs=0.02)
    assert kappa == pytest.approx(0.5, abs=0.02)


def test_exponent_window_checks(exact_phase):
    with pytest.raises(ValueError):
        estimate_exponent(exact_phase, (0.5, 0.99))
    with pytest.raises(InsufficientSamples):
        estimate_exponent(exact_phase, (0.99, 0.99001))


# one solved instance per region near r = 1: (spec, region)
REPRESENTATIVES = {
    "M11": ProblemSpec.from_expressions("r", "r*sqrt(1-r)", gamma0=1, delta0=1,
                                        gamma1=0.5, delta1=0),
    "M12": ProblemSpec.power(1, 1, 1, 0),
    "M13": ProblemSpec.from_expressions("1-r", "r*sqrt(1-r)", gamma0=1, delta0=0,
                                        gamma1=0.5, delta1=1),
    "M14": ProblemSpec.from_expressions("r", "r*(1-r)**2", gamma0=1, delta0=1,
                                        gamma1=2, delta1=0),
}


@pytest.fixture(scope="module")
def solved():
    out = {}
    for name, spec in REPRESENTATIVES.items():
        f = composite(spec)
        ps = solve_phase(f, critical_speed(f).bracket[1])
        out[name] = (spec, ps, reconstruct_profile(spec, ps))
    return out


@pytest.mark.slow
@pytest.mark.parametrize("name", list(REPRESENTATIVES))
def test_region_representatives(solved, name):
    spec, ps, wp = solved[name]
    report = classify(spec.gamma0, spec.delta0, spec.gamma1, spec.delta1)
    assert report.region1.value == name
    theta_hat, _, _ = estimate_exponent(ps)
    assert abs(theta_hat - report.predicted_theta) / report.predicted_theta < 0.05
    assert wp.z0_numeric_finite == report.z0_finite
    assert wp.z0_agreement


def test_existence_gate():
    with pytest.raises(NoTravellingWave):
        critical_speed(composite(ProblemSpec.power(0.5, 0, 1, 0)))
    with pytest.raises(NoTravellingWave):
        critical_speed(CompositeNonlinearity.power(0.75, 1))
    assert critical_speed(composite(ProblemSpec.power(1, 0.5, 1, 0)), tol_c=1e-4).c_star > 0
    assert math.isfinite(critical_speed(CompositeNonlinearity.power(1.5, 1), tol_c=1e-4).mu)
