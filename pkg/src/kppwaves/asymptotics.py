"""Parameter-region classification at the two equilibria and exponent fitting.

Near ``r = 0`` the pair ``(gamma0, delta0)`` decides existence::

    M01: gamma0 > 0, delta0 > -1, 0 < gamma0 + delta0 < 1     -> no wave
    M02: gamma0 > 0, delta0 > -1, gamma0 + delta0 >= 1        -> wave exists

Near ``r = 1`` the pair ``(gamma1, delta1)`` decides whether the profile
reaches 1 at a finite coordinate ``z0``::

    M11: 0 < gamma1 < 1 + delta1,  0 < gamma1 + delta1 <= 1   -> z0 finite
    M12: 0 < 1 + delta1 <= gamma1, 0 < gamma1 + delta1 <= 1   -> z0 = -inf
    M13: 0 < gamma1 < 1,           gamma1 + delta1 > 1        -> z0 finite
    M14: gamma1 >= 1, delta1 > -1, gamma1 + delta1 > 1        -> z0 = -inf

The comparison functions behind the last classification decay like
``(1-r)**(gamma1+delta1+1)`` in M11/M12 and ``(1-r)**(2(gamma1+delta1))``
in M13/M14; those exponents are reported as the predicted decay of ``y``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, OutOfDomain

BORDERLINE = 1e-12


class Region0(str, enum.Enum):
    M01 = "M01"
    M02 = "M02"
    INVALID = "Invalid"


class Region1(str, enum.Enum):
    M11 = "M11"
    M12 = "M12"
    M13 = "M13"
    M14 = "M14"
    INVALID = "Invalid"


class Existence(str, enum.Enum):
    EXISTS = "Exists"
    NO_WAVE = "NoWave"


@dataclass(frozen=True)
class ClassificationReport:
    region0: Region0
    region1: Region1
    existence: Existence
    z0_finite: bool | None
    predicted_theta: float
    borderline: tuple = ()

    def as_dict(self):
        return {"region0": self.region0.value, "region1": self.region1.value,
                "existence": self.existence.value, "z0_finite": self.z0_finite,
                "predicted_theta": self.predicted_theta, "borderline": list(self.borderline)}


def _admissible(gamma, delta):
    return gamma > 0 and delta > -1 and gamma + delta > 0


def classify_near_0(gamma0: float, delta0: float) -> tuple[Region0, Existence]:
    """Region of ``(gamma0, delta0)`` and the resulting existence verdict.

    The border ``gamma0 + delta0 = 1`` belongs to M02.
    """
    if not _admissible(gamma0, delta0):
        raise OutOfDomain(f"(gamma0, delta0) = ({gamma0}, {delta0}) is not admissible")
    if gamma0 + delta0 < 1:
        return Region0.M01, Existence.NO_WAVE
    return Region0.M02, Existence.EXISTS


def classify_near_1(gamma1: float, delta1: float) -> tuple[Region1, bool, float]:
    """Region of ``(gamma1, delta1)``, finiteness of ``z0`` and the decay exponent of ``y``."""
    if not _admissible(gamma1, delta1):
        raise OutOfDomain(f"(gamma1, delta1) = ({gamma1}, {delta1}) is not admissible")
    s = gamma1 + delta1
    if s <= 1:
        region = Region1.M11 if gamma1 < 1 + delta1 else Region1.M12
        theta = s + 1.0
    else:
        region = Region1.M13 if gamma1 < 1 else Region1.M14
        theta = 2.0 * s
    return region, region in (Region1.M11, Region1.M13), theta


def _borderline(gamma0, delta0, gamma1, delta1):
    flags = []
    if abs(gamma0 + delta0 - 1) <= BORDERLINE:
        flags.append("gamma0+delta0=1")
    if abs(gamma1 + delta1 - 1) <= BORDERLINE:
        flags.append("gamma1+delta1=1")
    if abs(gamma1 - 1 - delta1) <= BORDERLINE:
        flags.append("gamma1=1+delta1")
    if abs(gamma1 - 1) <= BORDERLINE:
        flags.append("gamma1=1")
    return tuple(flags)


def classify(gamma0, delta0, gamma1, delta1) -> ClassificationReport:
    """Full report for the four endpoint exponents.

    ``z0_finite`` is ``None`` when no wave exists, since the finiteness
    result presumes existence.
    """
    region0, existence = classify_near_0(gamma0, delta0)
    region1, z0_finite, theta = classify_near_1(gamma1, delta1)
    return ClassificationReport(
        region0=region0, region1=region1, existence=existence,
        z0_finite=z0_finite if existence is Existence.EXISTS else None,
        predicted_theta=theta, borderline=_borderline(gamma0, delta0, gamma1, delta1))


def classify_spec(spec) -> ClassificationReport:
    return classify(spec.gamma0, spec.delta0, spec.gamma1, spec.delta1)


def estimate_exponent(ps, window=None) -> tuple[float, float, float]:
    """Least-squares fit of ``log y = log kappa + theta log(1-r)`` inside ``window``.

    Parameters
    ----------
    ps : PhaseSolution
    window : (float, float), optional
        Range of ``r``; both ends must exceed 0.9. Defaults to
        ``(1 - 1e-2, 1 - 10 * ps.eps_seed)``.

    Returns
    -------
    theta_hat, kappa_hat, r2
    """
    if window is None:
        window = (1.0 - 1e-2, 1.0 - 10.0 * ps.eps_seed)
    lo, hi = sorted(window)
    if not (0.9 < lo and hi < 1.0):
        raise ValueError("window must lie inside (0.9, 1)")
    r = np.asarray(ps.grid)
    y = np.asarray(ps.y)
    mask = (r >= lo) & (r <= hi) & (y > 0)
    if np.count_nonzero(mask) < 8:
        raise InsufficientSamples(f"only {np.count_nonzero(mask)} samples inside {window}")
    x = np.log1p(-r[mask])
    ly = np.log(y[mask])
    slope, intercept = np.polyfit(x, ly, 1)
    fitted = intercept + slope * x
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(np.exp(intercept)), r2
