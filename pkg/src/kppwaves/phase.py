"""Backward phase-plane problem for the squared flux and the critical speed.

With ``V = -d(U) U'`` and ``y = V**2`` written as a function of the density
``r = U``, a travelling wave of speed ``c`` corresponds to a positive
solution of::

    dy/dr = 2 (c sqrt(y+) - f(r)),      y(0) = y(1) = 0.

The problem is overdetermined: we integrate backward from ``r = 1`` (seeded
with the local power law from :func:`seed_asymptotics`) and ask whether the
solution reaches ``r = 0`` inside the envelope ``y <= c**2 r**2``.

Numerics
--------
Both endpoints are power-law singular and the backward flow is stiff in the
regimes where ``c sqrt(y) ~ f`` (fast attraction onto a slow manifold). We
therefore integrate ``v = log y`` against the logit coordinate
``xi = log(r / (1 - r))`` with an implicit Radau IIA (order 5) method. In
these variables power laws at either end become straight lines.

Backward in ``r``, ``y`` never reaches zero inside (0, 1) (at ``y = 0`` the
slope is ``-2 f < 0``), so ``log y`` is always defined and the ``y+`` clamp
is never active for a converged integration.

Deciding whether the solution reaches zero uses two exact invariant regions
for ``w = sqrt(y) / r`` and ``q = f(r)/r`` (``dw/dlog r = c - w - q/w``):

* ``w > c`` is absorbing backward: the envelope is violated for good.
* with ``qbar(r) = sup of q on (0, r]`` and ``c**2 >= 4 qbar``, the region
  ``w <= (c + sqrt(c**2 - 4 qbar)) / 2`` is absorbing backward, so the
  solution reaches zero inside the envelope.

After the sampled range ``[r_min, 1 - eps_seed]`` the integration is
continued in the same variables down to ``r_floor`` until one of the two
regions is entered. This resolves critical speeds where the escape from
the envelope happens at exponentially small ``r`` (e.g. the classical KPP
nonlinearity just below ``c = 2``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.special import expit, log_expit, logit

from .errors import (BracketFailure, InvalidExponent, NonpositiveSpeed,
                     NoTravellingWave, StepFailure)
from .problem import CompositeNonlinearity, compute_mu

BORDER_TOL = 1e-12
MAX_BISECTIONS = 200
FIRST_STEP = 1e-4


class Status(str, enum.Enum):
    REACHED_ZERO = "ReachedZero"
    POSITIVE_AT_ZERO = "PositiveAtZero"
    CLAMPED = "Clamped"


@dataclass(frozen=True)
class PhaseSolution:
    """Sampled backward solution ``y_c(r)`` on ``[r_min, 1 - eps_seed]``.

    ``grid`` is increasing in ``r``; ``xi`` and ``log_y`` hold the same
    samples in the integration variables. ``theta``/``kappa`` describe the
    seed model ``y ~ kappa (1-r)**theta`` used beyond the sampled range.
    ``r_decided`` is where the status became certain (``None`` when the
    integration reached ``r_floor`` without entering either invariant
    region; the envelope still held there).
    """

    c: float
    grid: np.ndarray
    y: np.ndarray
    y_at_rmin: float
    status: Status
    theta: float
    kappa: float
    eps_seed: float
    r_min: float
    xi: np.ndarray = field(repr=False)
    log_y: np.ndarray = field(repr=False)
    r_decided: float | None = None
    nfev: int = 0

    @property
    def reached_zero(self) -> bool:
        return self.status is Status.REACHED_ZERO

    def y_at(self, r):
        """``y`` anywhere in [0, 1]: interpolated inside the samples, modelled outside.

        ``y(0) = y(1) = 0``.
        """
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.exp(LogFlux(self)(logit(np.clip(r, 0.0, 1.0))))
        out = np.where((r <= 0) | (r >= 1), 0.0, out)
        return out if out.ndim else float(out)


class LogFlux:
    """``log y`` as a function of the logit coordinate, with endpoint models."""

    def __init__(self, ps: PhaseSolution):
        self.ps = ps
        self._pchip = PchipInterpolator(ps.xi, ps.log_y)
        self.xi_lo, self.xi_hi = ps.xi[0], ps.xi[-1]
        near0 = ps.grid <= 10.0 * ps.grid[0]
        if np.count_nonzero(near0) < 4:
            near0 = slice(0, 4)
        slope, intercept = np.polyfit(np.log(ps.grid[near0]), ps.log_y[near0], 1)
        self.slope0, self.intercept0 = float(slope), float(intercept)

    def __call__(self, xi, log_r=None, log_1mr=None):
        xi = np.asarray(xi, dtype=float)
        if log_r is None:
            log_r = -np.logaddexp(0.0, -xi)
        if log_1mr is None:
            log_1mr = -np.logaddexp(0.0, xi)
        inside = np.clip(xi, self.xi_lo, self.xi_hi)
        out = self._pchip(inside)
        out = np.where(xi > self.xi_hi, math.log(self.ps.kappa) + self.ps.theta * log_1mr, out)
        out = np.where(xi < self.xi_lo, self.intercept0 + self.slope0 * log_r, out)
        return out


@dataclass(frozen=True)
class SpeedResult:
    c_star: float
    bracket: tuple
    mu: float
    upper_bound: float
    iterations: int
    verified: bool = True

    def as_dict(self):
        return {"c_star": self.c_star, "bracket": list(self.bracket), "mu": self.mu,
                "upper_bound": self.upper_bound, "iterations": self.iterations,
                "monotonicity_verified": self.verified}


def seed_asymptotics(f: CompositeNonlinearity, c: float) -> tuple[float, float]:
    """Exponent and coefficient of the local model ``y ~ kappa (1-r)**theta`` at ``r = 1``.

    ``sigma1 < 1``: the slope balances the reaction, ``theta = sigma1 + 1``,
    ``kappa = 2 f1 / (sigma1 + 1)``.
    ``sigma1 > 1``: ``c sqrt(y)`` balances ``f``, ``theta = 2 sigma1``,
    ``kappa = (f1 / c)**2``.
    ``sigma1 == 1`` (within 1e-12): all three terms balance, ``theta = 2`` and
    ``sqrt(kappa) = (-c + sqrt(c**2 + 4 f1)) / 2``.
    """
    if not c > 0:
        raise NonpositiveSpeed(f"wave speed must be positive, got c={c!r}")
    s1, f1 = f.sigma1, f.f1
    if not s1 > 0:
        raise InvalidExponent(f"gamma1 + delta1 must be positive, got {s1!r}")
    if abs(s1 - 1.0) <= BORDER_TOL:
        root = 0.5 * (-c + math.sqrt(c * c + 4.0 * f1))
        return 2.0, root * root
    if s1 < 1.0:
        return s1 + 1.0, 2.0 * f1 / (s1 + 1.0)
    return 2.0 * s1, (f1 / c) ** 2


class _Flow:
    """Right-hand side of ``dv/dxi`` for ``v = log y``."""

    def __init__(self, f, c):
        self.f = f
        self.c = c

    def _terms(self, xi):
        r = expit(xi)
        lr = log_expit(xi)
        q = float(self.f(r)) / r if r > 0 else 0.0
        return r, lr, q

    def rhs(self, xi, v):
        r, lr, q = self._terms(xi)
        first = self.c * math.exp(min(lr - 0.5 * v[0], 700.0))
        second = q * math.exp(min(2.0 * lr - v[0], 700.0)) if q > 0 else 0.0
        return [2.0 * (1.0 - r) * (first - second)]

    def jac(self, xi, v):
        r, lr, q = self._terms(xi)
        first = self.c * math.exp(min(lr - 0.5 * v[0], 700.0))
        second = q * math.exp(min(2.0 * lr - v[0], 700.0)) if q > 0 else 0.0
        return [[2.0 * (1.0 - r) * (-0.5 * first + second)]]


def _qbar_table(f, xi_lo, xi_hi, n=4000):
    """Running supremum of ``f(r)/r`` from ``r -> 0`` upward, on a logit grid."""
    xg = np.linspace(xi_lo, xi_hi, n)
    r = expit(xg)
    with np.errstate(all="ignore"):
        q = np.asarray(f(r), dtype=float) / r
    q = np.where(np.isfinite(q), q, np.inf)
    return xg, np.maximum.accumulate(q)


def solve_phase(f: CompositeNonlinearity, c: float, tol: float = 1e-10, r_min: float = 1e-6,
                *, eps_seed: float = 1e-6, rtol: float = 1e-8, r_floor: float = 1e-300,
                grid_step: float = 0.01) -> PhaseSolution:
    """Integrate the phase-plane equation backward from ``r = 1 - eps_seed`` to ``r_min``.

    Parameters
    ----------
    f : CompositeNonlinearity
    c : float
        Wave speed, must be positive.
    tol : float
        Absolute tolerance on ``log y``.
    r_min : float
        Left end of the sampled range, ``0 < r_min < 1/2``.
    eps_seed : float
        Distance from ``r = 1`` at which the seed model is imposed.
    rtol : float
        Relative tolerance on ``log y``.
    r_floor : float
        How far toward ``r = 0`` the continuation may go to settle the status.
    grid_step : float
        Sample spacing in the logit coordinate.

    Returns
    -------
    PhaseSolution
        ``status`` is ``ReachedZero`` if the solution stays inside
        ``y <= c**2 r**2`` all the way to zero, ``PositiveAtZero`` otherwise.

    Raises
    ------
    NonpositiveSpeed
    StepFailure
        If the implicit integrator cannot continue.
    """
    if not c > 0:
        raise NonpositiveSpeed(f"wave speed must be positive, got c={c!r}")
    if not 0 < r_min < 0.5:
        raise ValueError("r_min must lie in (0, 1/2)")
    if not 0 < eps_seed < 0.5:
        raise ValueError("eps_seed must lie in (0, 1/2)")
    if not tol > 0:
        raise ValueError("tol must be positive")
    theta, kappa = seed_asymptotics(f, c)
    flow = _Flow(f, c)
    xi_seed = math.log((1.0 - eps_seed) / eps_seed)
    xi_min = float(logit(r_min))
    n = max(int(math.ceil((xi_seed - xi_min) / grid_step)), 8)
    t_eval = np.linspace(xi_seed, xi_min, n + 1)
    v_seed = math.log(kappa) + theta * math.log(eps_seed)

    # the automatic first step follows |dv/dxi|, which is huge when the seed sits
    # slightly off a very stiff slow manifold; the L-stable method can start larger
    sol = solve_ivp(flow.rhs, (xi_seed, xi_min), [v_seed], method="Radau", t_eval=t_eval,
                    atol=tol, rtol=rtol, jac=flow.jac, first_step=FIRST_STEP)
    if sol.status != 0:
        raise StepFailure(f"integration failed at c={c:.10g}: {sol.message}")
    nfev = sol.nfev
    xi = sol.t[::-1].copy()
    log_y = sol.y[0][::-1].copy()
    grid = expit(xi)
    y = np.exp(log_y)
    log_c = math.log(c)

    def make(status, r_decided):
        return PhaseSolution(c=float(c), grid=grid, y=y, y_at_rmin=float(y[0]), status=status,
                             theta=theta, kappa=kappa, eps_seed=eps_seed, r_min=r_min,
                             xi=xi, log_y=log_y, r_decided=r_decided, nfev=nfev)

    if not np.all(np.isfinite(log_y)):
        return make(Status.CLAMPED, None)

    # w > c anywhere is absorbing backward
    excess = log_y - 2.0 * (log_c + log_expit(xi))
    if np.any(excess > 0):
        where = grid[np.nonzero(excess > 0)[0][-1]]
        return make(Status.POSITIVE_AT_ZERO, float(where))

    xi_floor = float(logit(r_floor))
    xg, qbar = _qbar_table(f, xi_floor, xi_min)

    def qbar_at(x):
        i = min(int(np.searchsorted(xg, x)), len(xg) - 1)
        return qbar[i]

    def basin_gap(x, v):
        disc = c * c - 4.0 * qbar_at(x)
        if not disc >= 0:
            return 1.0
        w = math.exp(0.5 * v[0] - log_expit(x))
        return w - 0.5 * (c + math.sqrt(disc))

    def envelope_gap(x, v):
        return v[0] - 2.0 * (log_c + log_expit(x))

    basin_gap.terminal = True
    envelope_gap.terminal = True

    if basin_gap(xi_min, [log_y[0]]) <= 0:
        return make(Status.REACHED_ZERO, float(r_min))

    deep = solve_ivp(flow.rhs, (xi_min, xi_floor), [log_y[0]], method="Radau",
                     atol=tol, rtol=rtol, jac=flow.jac, events=[envelope_gap, basin_gap],
                     first_step=FIRST_STEP)
    nfev += deep.nfev
    if deep.status == -1:
        raise StepFailure(f"continuation toward r=0 failed at c={c:.10g}: {deep.message}")
    if len(deep.t_events[0]):
        return make(Status.POSITIVE_AT_ZERO, float(expit(deep.t_events[0][0])))
    if len(deep.t_events[1]):
        return make(Status.REACHED_ZERO, float(expit(deep.t_events[1][0])))
    if not np.all(np.isfinite(deep.y)):
        return make(Status.CLAMPED, None)
    return make(Status.REACHED_ZERO, None)


def critical_speed(f: CompositeNonlinearity, tol_c: float = 1e-6, **solver_options) -> SpeedResult:
    """Smallest speed with a positive phase-plane solution, by bisection.

    ``solver_options`` are passed on to :func:`solve_phase`.

    Raises
    ------
    NoTravellingWave
        If ``sup f(r)/r`` is infinite, or no solution exists even at the
        upper bound ``2 sqrt(mu)``.
    BracketFailure
        If halving the speed never produces a failing trial.
    """
    mu = compute_mu(f)
    if math.isinf(mu):
        raise NoTravellingWave("f(r)/r is unbounded as r -> 0+; no travelling wave exists")

    def reaches(c):
        return solve_phase(f, c, **solver_options).reached_zero

    upper = 2.0 * math.sqrt(mu)
    hi = upper
    if not reaches(hi):
        hi = upper * (1.0 + tol_c)
        if not reaches(hi):
            raise NoTravellingWave(
                f"no positive solution at the upper bound 2*sqrt(mu) = {upper:.10g}")
    lo = None
    for k in range(1, 64):
        trial = upper * 2.0**-k
        if not reaches(trial):
            lo = trial
            break
        hi = trial
    if lo is None:
        raise BracketFailure("could not find a speed without a travelling wave")

    iterations = 0
    while hi - lo >= tol_c and iterations < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
    c_star = 0.5 * (lo + hi)
    verified = reaches(c_star * (1 + 10 * tol_c)) and not reaches(c_star * (1 - 10 * tol_c))
    return SpeedResult(c_star=c_star, bracket=(lo, hi), mu=mu, upper_bound=upper,
                       iterations=iterations, verified=verified)
