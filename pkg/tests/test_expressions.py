import math
import pickle

import numpy as np
import pytest

from kppwaves.errors import ExpressionError
from kppwaves.expressions import compile_expression


@pytest.mark.parametrize("text, r, expected", [
    ("r*(1 - r)", 0.5, 0.25),
    ("r**2*(1-r)", 0.5, 0.125),
    ("sqrt(r)*(1-r)", 0.25, 0.375),
    ("exp(-r) - exp(-1)", 1.0, 0.0),
    ("log(1 + r)", 1.0, math.log(2)),
    ("-r + 2/4", 0.5, 0.0),
    ("3", 0.7, 3.0),
])
def test_values(text, r, expected):
    assert compile_expression(text)(r) == pytest.approx(expected, abs=1e-15)


def test_vectorised_and_constant_broadcast():
    r = np.linspace(0, 1, 5)
    np.testing.assert_allclose(compile_expression("r*(1-r)")(r), r * (1 - r))
    assert compile_expression("2")(r).shape == r.shape


@pytest.mark.parametrize("text, column, fragment", [
    ("r*(1-r)^2", 1, "use ** for powers"),
    ("r + x", 5, "unknown name 'x'"),
    ("  r + y", 7, "unknown name 'y'"),
    ("sin(r)", 1, "only sqrt, exp and log"),
    ("sqrt(r, 2)", 1, "exactly one argument"),
    ("r +", None, "syntax error"),
    ("", 1, "empty"),
    ("r if r else 1", 1, "unsupported syntax"),
    ("'r'", 1, "unsupported literal"),
])
def test_errors_carry_columns(text, column, fragment):
    with pytest.raises(ExpressionError) as info:
        compile_expression(text)
    assert fragment in str(info.value)
    if column is not None:
        assert info.value.column == column


def test_equality_hash_and_pickle():
    a = compile_expression(" r*(1-r) ")
    b = pickle.loads(pickle.dumps(a))
    assert a == b and hash(a) == hash(b)
    assert b(0.5) == 0.25
