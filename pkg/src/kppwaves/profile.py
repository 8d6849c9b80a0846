"""Wave profiles from phase-plane solutions.

The profile is recovered through its inverse ``z(U)``::

    dz/dU = -d(U) / sqrt(y(U)),      z(1/2) = 0,

evaluated on a Chebyshev-clustered ``U`` grid. The endpoint coordinates
``z0 = z(1-)`` and ``z1 = z(0+)`` are improper integrals. Each tail is
split into 40 geometric shells (ratio 1/2) beyond the outermost grid value
and the shell contributions decide convergence:

* geometric decay with a stable extrapolated sum (window of 5 shells,
  spread below 1e-8) means a finite endpoint;
* decay slower than ``2**-0.05`` per shell, or partial sums above 1e6,
  means divergence (with only 40 shells such tails cannot be told apart
  from a divergent one);
* anything else raises :class:`QuadratureDivergenceUndetermined`.

Beyond the sampled range of the phase solution, ``y`` follows the seed
model ``kappa (1-r)**theta`` near ``r = 1`` and a log-log linear fit of the
outermost decade of samples near ``r = 0``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.special import expit, logit

from .asymptotics import Existence, classify_spec
from .errors import InsufficientSupport, NotASolution, QuadratureDivergenceUndetermined
from .phase import LogFlux, PhaseSolution
from .problem import DiffusionPrimitive, ProblemSpec, chebyshev_grid

N_SHELLS = 40
SHELL_WINDOW = 5
SHELL_STABLE = 1e-8
SHELL_BLOWUP = 1e6
MIN_DECAY_RATE = 0.05
MODEL_CUTOFF = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class WaveProfile:
    """Sampled profile ``U(z)`` with ``U(0) = 1/2``; ``z`` increasing, ``U`` decreasing.

    ``z0``/``z1`` are ``-inf``/``+inf`` for front-type ends. Outside
    ``(z0, z1)`` the profile is the constant 1 (left) or 0 (right).
    ``tails`` holds the integrals of ``g(U)`` over the parts of
    ``(z0, z1)`` not covered by the samples; ``g_mass[i]`` is the integral
    of ``g(U)`` from ``z[i]`` to ``z1``, accumulated during reconstruction.
    """

    c: float
    z: np.ndarray
    U: np.ndarray
    z0: float
    z1: float
    flux: np.ndarray = field(repr=False)
    tails: dict = field(default_factory=dict, repr=False)
    g_mass: np.ndarray | None = field(default=None, repr=False)
    z0_numeric_finite: bool | None = None
    z0_analytic_finite: bool | None = None

    @property
    def z0_finite(self) -> bool:
        # the analytic verdict wins when both exist
        if self.z0_analytic_finite is not None:
            return self.z0_analytic_finite
        return bool(np.isfinite(self.z0))

    @property
    def z1_finite(self) -> bool:
        return bool(np.isfinite(self.z1))

    @property
    def z0_agreement(self) -> bool | None:
        if self.z0_analytic_finite is None or self.z0_numeric_finite is None:
            return None
        return self.z0_analytic_finite == self.z0_numeric_finite

    def U_at(self, z):
        """Evaluate the profile, extended by 1 left of ``z0`` and 0 right of ``z1``."""
        z = np.asarray(z, dtype=float)
        interp = _profile_interp(self)
        out = np.asarray(interp(np.clip(z, self.z[0], self.z[-1])), dtype=float)
        left = z < self.z[0]
        right = z > self.z[-1]
        if np.isfinite(self.z0):
            span = self.z[0] - self.z0
            frac = np.clip((self.z[0] - z) / span, 0.0, 1.0) if span > 0 else 1.0
            out = np.where(left, self.U[0] + (1.0 - self.U[0]) * frac, out)
        else:
            out = np.where(left, self.U[0], out)
        if np.isfinite(self.z1):
            span = self.z1 - self.z[-1]
            frac = np.clip((z - self.z[-1]) / span, 0.0, 1.0) if span > 0 else 1.0
            out = np.where(right, self.U[-1] * (1.0 - frac), out)
        else:
            out = np.where(right, self.U[-1], out)
        return out if out.ndim else float(out)

    def shifted(self, zeta: float) -> "WaveProfile":
        """Translate the profile by ``zeta`` (``U(z) -> U(z - zeta)``)."""
        return replace(self, z=self.z + zeta, z0=self.z0 + zeta, z1=self.z1 + zeta)

    def crossing(self, level: float = 0.5) -> float:
        """Coordinate where ``U`` crosses ``level`` (linear interpolation)."""
        return float(np.interp(-level, -self.U, self.z))

    def normalized(self) -> "WaveProfile":
        """Translate so that ``U(0) = 1/2``."""
        return self.shifted(-self.crossing(0.5))


@functools.lru_cache(maxsize=32)
def _interp_cache(key):
    z, U = key
    return PchipInterpolator(np.frombuffer(z), np.frombuffer(U))


def _profile_interp(wp):
    return _interp_cache((wp.z.tobytes(), wp.U.tobytes()))


def _diffusion(spec, r, t, near_one):
    """``d`` at ``r``, switching to the declared power law within MODEL_CUTOFF of an end."""
    with np.errstate(all="ignore"):
        if near_one:
            direct = np.asarray(spec.diffusion(r), dtype=float) * np.ones_like(t)
            model = spec.d1 * t**spec.delta1
        else:
            direct = np.asarray(spec.diffusion(r), dtype=float) * np.ones_like(t)
            model = spec.d0 * t**spec.delta0
    return np.where(t < MODEL_CUTOFF, model, direct)


def _reaction(spec, r, t, near_one):
    with np.errstate(all="ignore"):
        direct = np.asarray(spec.reaction(r), dtype=float) * np.ones_like(t)
        model = spec.g1 * t**spec.gamma1 if near_one else spec.g0 * t**spec.gamma0
    return np.where(t < MODEL_CUTOFF, model, direct)


def _shell_integrals(spec, logflux, t_start, near_one):
    """Shell integrals of ``d/sqrt(y)`` and ``g d/sqrt(y)`` in the distance ``t`` to an end."""
    k = np.arange(N_SHELLS)
    hi = math.log(t_start) - k * math.log(2.0)
    lo = hi - math.log(2.0)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    log_t = mid[:, None] + half[:, None] * _GL_X[None, :]
    t = np.exp(log_t)
    log_1mt = np.log1p(-t)
    if near_one:
        r = 1.0 - t
        xi = log_1mt - log_t
        ly = logflux(xi, log_r=log_1mt, log_1mr=log_t)
    else:
        r = t
        xi = log_t - log_1mt
        ly = logflux(xi, log_r=log_t, log_1mr=log_1mt)
    d = _diffusion(spec, r, t, near_one)
    g = _reaction(spec, r, t, near_one)
    dz = d * np.exp(-0.5 * ly) * t
    z_inc = (dz * _GL_W).sum(axis=1) * half
    g_inc = (g * dz * _GL_W).sum(axis=1) * half
    return z_inc, g_inc


def shell_sum(increments, label="tail"):
    """Decide convergence of a tail from its geometric-shell contributions.

    Returns the (extrapolated) sum, or ``inf`` for a divergent tail.
    """
    inc = np.asarray(increments, dtype=float)
    if not np.all(np.isfinite(inc)):
        return math.inf
    partial = np.cumsum(inc)
    if partial[-1] > SHELL_BLOWUP:
        return math.inf
    if np.all(inc[-SHELL_WINDOW:] == 0.0):
        return float(partial[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = inc[1:] / inc[:-1]
    last = ratios[-SHELL_WINDOW:]
    if np.all(last >= 2.0**-MIN_DECAY_RATE):
        return math.inf
    if np.all((last >= 0) & (last < 1)):
        extrap = partial[1:] + inc[1:] * ratios / (1.0 - ratios)
        tail = extrap[-SHELL_WINDOW:]
        if np.ptp(tail) <= SHELL_STABLE * max(1.0, abs(tail[-1])):
            return float(tail[-1])
    raise QuadratureDivergenceUndetermined(
        f"{label}: shell sums neither stabilise nor diverge (last ratios {last})")


def reconstruct_profile(spec: ProblemSpec, ps: PhaseSolution, n: int = 2048) -> WaveProfile:
    """Invert the phase-plane substitution to get ``U(z)`` at speed ``ps.c``.

    The samples are ``n`` Chebyshev points in ``U`` plus ``U = 1/2`` itself,
    which sits at ``z = 0``.

    Raises
    ------
    NotASolution
        If ``ps`` did not reach zero inside the envelope.
    QuadratureDivergenceUndetermined
        If an endpoint integral cannot be classified.
    """
    if not ps.reached_zero:
        raise NotASolution(f"phase solution at c={ps.c:.10g} has status {ps.status.value}")
    logflux = LogFlux(ps)
    U = chebyshev_grid(n)
    xi_nodes = np.union1d(logit(U), [0.0])
    i0 = int(np.searchsorted(xi_nodes, 0.0))

    a, b = xi_nodes[:-1], xi_nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    xq = mid[:, None] + half[:, None] * _GL_X[None, :]
    log_r = -np.logaddexp(0.0, -xq)
    log_1mr = -np.logaddexp(0.0, xq)
    r = np.exp(log_r)
    with np.errstate(all="ignore"):
        d = np.asarray(spec.diffusion(r), dtype=float) * np.ones_like(r)
        g = np.asarray(spec.reaction(r), dtype=float) * np.ones_like(r)
    dz_dxi = d * np.exp(log_r + log_1mr - 0.5 * logflux(xq, log_r, log_1mr))
    cells = (dz_dxi * _GL_W).sum(axis=1) * half
    # accumulate outward from U = 1/2 so large tail cells cannot swamp z near 0
    cum = np.zeros(len(xi_nodes))
    cum[i0 + 1:] = np.cumsum(cells[i0:])
    cum[:i0] = -np.cumsum(cells[:i0][::-1])[::-1]
    g_cum = np.concatenate([[0.0], np.cumsum((g * dz_dxi * _GL_W).sum(axis=1) * half)])
    # the U = 1/2 node is kept so the normalisation holds exactly at a sample
    z_of_U = -cum
    g_of_U = g_cum
    U = expit(xi_nodes)

    z1_inc, g0_inc = _shell_integrals(spec, logflux, U[0], near_one=False)
    z0_inc, g1_inc = _shell_integrals(spec, logflux, 1.0 - U[-1], near_one=True)
    tail0 = shell_sum(z1_inc, "z1 tail")
    tail1 = shell_sum(z0_inc, "z0 tail")
    z1 = z_of_U[0] + tail0
    z0 = z_of_U[-1] - tail1

    try:
        report = classify_spec(spec)
        analytic = report.z0_finite if report.existence is Existence.EXISTS else None
    except Exception:
        analytic = None

    flux = np.exp(0.5 * logflux(xi_nodes))
    g_right = float(np.sum(g0_inc))
    return WaveProfile(
        c=ps.c, z=z_of_U[::-1].copy(), U=U[::-1].copy(), z0=float(z0), z1=float(z1),
        flux=flux[::-1].copy(),
        tails={"g_left": float(np.sum(g1_inc)), "g_right": g_right},
        g_mass=(g_of_U + g_right)[::-1].copy(),
        z0_numeric_finite=bool(np.isfinite(z0)), z0_analytic_finite=analytic)


@functools.lru_cache(maxsize=16)
def _primitive(spec):
    return DiffusionPrimitive(spec)


def residual_integral_form(spec: ProblemSpec, wp: WaveProfile, primitive=None) -> tuple[float, float]:
    """Residuals of the one-sided integral form and of the speed identity.

    ``res_def`` is the largest interior value of
    ``|d/dz D(U) + c U - integral_z^z1 g(U)|`` (central differences in ``z``);
    ``res_speed`` is ``|c - integral g(U) dz|`` over the whole line.

    Raises
    ------
    InsufficientSupport
        If the samples do not cover ``U`` in ``[1e-4, 1 - 1e-4]``.
    """
    U, z = wp.U, wp.z
    if not (U.min() <= 1e-4 and U.max() >= 1 - 1e-4) or len(U) < 16:
        raise InsufficientSupport("profile samples must cover U in [1e-4, 1 - 1e-4]")
    DU = _primitive_at(spec, U, primitive)
    # near a finite end z can stall in floating point; keep distinct nodes only
    keep = np.concatenate([[True], np.diff(z) > 0])
    dD = np.full_like(U, np.nan)
    dD[keep] = np.gradient(DU[keep], z[keep])
    right = wp.tails.get("g_right", 0.0)
    left = wp.tails.get("g_left", 0.0)
    if wp.g_mass is not None:
        from_right = wp.g_mass
    else:
        with np.errstate(all="ignore"):
            G = np.asarray(spec.reaction(U), dtype=float) * np.ones_like(U)
        from_right = cumulative_trapezoid(G[::-1], -z[::-1], initial=0.0)[::-1] + right
    resid = np.abs(dD + wp.c * U - from_right)[1:-1][keep[1:-1]]
    total = from_right[0] + left
    return float(resid.max()), float(abs(wp.c - total))


def _primitive_at(spec, U, primitive=None):
    """``D`` at the (decreasing) samples ``U``.

    The table value at the smallest sample is the anchor; increments between
    neighbouring samples use Gauss-Legendre quadrature of ``d`` so that the
    differences entering ``dD/dz`` carry no interpolation error.
    """
    D = primitive if primitive is not None else _primitive(spec)
    u = U[::-1]
    a, b = u[:-1], u[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    with np.errstate(all="ignore"):
        dq = np.asarray(spec.diffusion(mid[:, None] + half[:, None] * _GL_X[None, :]), dtype=float)
    inc = (dq * _GL_W).sum(axis=1) * half
    values = float(D(u[0])) + np.concatenate([[0.0], np.cumsum(inc)])
    return values[::-1]
