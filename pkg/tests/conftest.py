import math

import pytest

from kppwaves.phase import solve_phase
from kppwaves.problem import ProblemSpec, composite
from kppwaves.profile import reconstruct_profile

C_EXACT = 1 / math.sqrt(2)
# the exact speed is a separatrix; stay a hair above it
C_ABOVE = C_EXACT * (1 + 1e-8)


@pytest.fixture(scope="session")
def exact_spec():
    """d = r, g = r(1-r): y = r^2 (1-r)^2 / 2 at c = 1/sqrt(2)."""
    return ProblemSpec.power(1, 1, 1, 0)


@pytest.fixture(scope="session")
def kpp_spec():
    """Classical Fisher-KPP, d = 1, g = r(1-r)."""
    return ProblemSpec.power(1, 0, 1, 0)


@pytest.fixture(scope="session")
def exact_phase(exact_spec):
    return solve_phase(composite(exact_spec), C_ABOVE)


@pytest.fixture(scope="session")
def exact_profile(exact_spec, exact_phase):
    return reconstruct_profile(exact_spec, exact_phase)


@pytest.fixture(scope="session")
def kpp_profile(kpp_spec):
    ps = solve_phase(composite(kpp_spec), 2.0 * (1 + 1e-8))
    return reconstruct_profile(kpp_spec, ps)
