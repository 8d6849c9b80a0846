"""Problem definition: diffusion ``d``, reaction ``g`` and the product ``f = d*g``.

A :class:`ProblemSpec` bundles the two scalar functions with the declared
power-law behaviour at the equilibria::

    g(r) ~ g0 r**gamma0,        d(r) ~ d0 r**delta0          as r -> 0+
    g(r) ~ g1 (1-r)**gamma1,    d(r) ~ d1 (1-r)**delta1      as r -> 1-

The exponents are inputs; :func:`validate_spec` checks them numerically
against the functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import ExponentMismatch, SpecViolation
from .expressions import Expression, compile_expression

LIMIT_RADII = (1e-4, 1e-5)
LIMIT_RTOL = 0.05


class PowerLaw:
    """``coef * r**e0 * (1 - r)**e1``, vectorised and picklable."""

    def __init__(self, coef, e0, e1):
        self.coef = float(coef)
        self.e0 = float(e0)
        self.e1 = float(e1)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self.coef * r**self.e0 * (1.0 - r) ** self.e1
        return out if out.ndim else float(out)

    def __eq__(self, other):
        return isinstance(other, PowerLaw) and (self.coef, self.e0, self.e1) == (
            other.coef, other.e0, other.e1)

    def __hash__(self):
        return hash((self.coef, self.e0, self.e1))

    def __repr__(self):
        return f"PowerLaw({self.coef!r}, {self.e0!r}, {self.e1!r})"

    def describe(self):
        return {"kind": "power", "coefficient": self.coef,
                "exponent0": self.e0, "exponent1": self.e1}


def _describe(fn):
    if isinstance(fn, PowerLaw):
        return fn.describe()
    if isinstance(fn, Expression):
        return {"kind": "expr", "expr": fn.text}
    return {"kind": "callable", "repr": repr(fn)}


@dataclass(frozen=True)
class ProblemSpec:
    """Diffusion/reaction pair with declared endpoint power laws.

    ``diffusion`` and ``reaction`` must accept float or ndarray arguments.
    """

    diffusion: Callable
    reaction: Callable
    gamma0: float
    delta0: float
    gamma1: float
    delta1: float
    g0: float = 1.0
    g1: float = 1.0
    d0: float = 1.0
    d1: float = 1.0

    @classmethod
    def power(cls, gamma0, delta0, gamma1, delta1, g0=1.0, d0=1.0):
        """Pure power family ``d = d0 r^delta0 (1-r)^delta1``, ``g = g0 r^gamma0 (1-r)^gamma1``.

        In this family the coefficients at both ends coincide (``g1 = g0``,
        ``d1 = d0``).
        """
        return cls(PowerLaw(d0, delta0, delta1), PowerLaw(g0, gamma0, gamma1),
                   gamma0, delta0, gamma1, delta1, g0=g0, g1=g0, d0=d0, d1=d0)

    @classmethod
    def from_expressions(cls, diffusion: str, reaction: str, *, gamma0, delta0,
                         gamma1, delta1, g0=1.0, g1=1.0, d0=1.0, d1=1.0):
        return cls(compile_expression(diffusion), compile_expression(reaction),
                   gamma0, delta0, gamma1, delta1, g0=g0, g1=g1, d0=d0, d1=d1)

    def describe(self) -> dict:
        """JSON-friendly description (used in run manifests)."""
        return {
            "diffusion": _describe(self.diffusion),
            "reaction": _describe(self.reaction),
            "exponents": {"gamma0": self.gamma0, "delta0": self.delta0,
                          "gamma1": self.gamma1, "delta1": self.delta1},
            "coefficients": {"g0": self.g0, "g1": self.g1, "d0": self.d0, "d1": self.d1},
        }


class _Product:
    def __init__(self, d, g):
        self.d = d
        self.g = g

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.asarray(self.d(r), dtype=float) * np.asarray(self.g(r), dtype=float)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class CompositeNonlinearity:
    """``f = d*g`` with its endpoint coefficients and exponents."""

    f: Callable
    f0: float
    f1: float
    sigma0: float
    sigma1: float

    def __call__(self, r):
        return self.f(r)

    @classmethod
    def power(cls, sigma0, sigma1, coef=1.0):
        """``coef * r**sigma0 * (1-r)**sigma1`` (handy for phase-plane work alone)."""
        return cls(PowerLaw(coef, sigma0, sigma1), coef, coef, sigma0, sigma1)


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    def add(self, name, passed, detail=""):
        self.checks.append((name, bool(passed), detail))

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def __str__(self):
        return "\n".join(f"[{'pass' if ok else 'FAIL'}] {name}: {detail}"
                         for name, ok, detail in self.checks)


def chebyshev_grid(n: int) -> np.ndarray:
    """``n`` points in (0, 1) clustered at both ends, endpoints excluded."""
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / n))


def _values(fn, r):
    with np.errstate(all="ignore"):
        return np.asarray(fn(r), dtype=float) * np.ones_like(r)


def validate_spec(spec: ProblemSpec, samples: int = 512) -> ValidationReport:
    """Sampled check of positivity, endpoint zeros, exponent ranges and limits.

    Raises
    ------
    SpecViolation
        If ``d`` or ``g`` fail positivity/zero conditions or the exponents
        violate the admissible ranges.
    ExponentMismatch
        If the declared endpoint power laws disagree with the functions by
        more than 5% at ``r`` (or ``1-r``) equal to 1e-4 and 1e-5.
    """
    if samples < 16:
        raise ValueError("samples must be >= 16")
    report = ValidationReport()
    r = chebyshev_grid(samples)

    d = _values(spec.diffusion, r)
    ok = bool(np.all(np.isfinite(d) & (d > 0)))
    report.add("H1: d > 0 on (0,1)", ok, f"min d = {np.nanmin(d):.6g}")
    if not ok:
        bad = r[~(np.isfinite(d) & (d > 0))][0]
        raise SpecViolation(f"d must be positive on (0,1); fails at r={bad:.6g}")

    g = _values(spec.reaction, r)
    ends = _values(spec.reaction, np.array([0.0, 1.0]))
    ok_ends = bool(np.all(np.abs(ends) <= 1e-14))
    ok_pos = bool(np.all(np.isfinite(g) & (g > 0)))
    report.add("H2: g(0) = g(1) = 0", ok_ends, f"g(0)={ends[0]:.3g}, g(1)={ends[1]:.3g}")
    report.add("H2: g > 0 on (0,1)", ok_pos, f"min g = {np.nanmin(g):.6g}")
    if not ok_ends:
        raise SpecViolation(f"g must vanish at 0 and 1; got g(0)={ends[0]:.6g}, g(1)={ends[1]:.6g}")
    if not ok_pos:
        bad = r[~(np.isfinite(g) & (g > 0))][0]
        raise SpecViolation(f"g must be positive on (0,1); fails at r={bad:.6g}")

    restrictions = [
        ("gamma0 > 0", spec.gamma0 > 0), ("gamma1 > 0", spec.gamma1 > 0),
        ("delta0 > -1", spec.delta0 > -1), ("delta1 > -1", spec.delta1 > -1),
        ("gamma0 + delta0 > 0", spec.gamma0 + spec.delta0 > 0),
        ("gamma1 + delta1 > 0", spec.gamma1 + spec.delta1 > 0),
        ("coefficients positive", min(spec.g0, spec.g1, spec.d0, spec.d1) > 0),
    ]
    for name, ok in restrictions:
        report.add(name, ok)
        if not ok:
            raise SpecViolation(f"parameter restriction violated: {name}")

    mismatches = []
    for t in LIMIT_RADII:
        t_arr = np.array([t])
        one = 1.0 - t_arr
        pairs = [
            ("d0", _values(spec.diffusion, t_arr)[0] / t**spec.delta0, spec.d0),
            ("g0", _values(spec.reaction, t_arr)[0] / t**spec.gamma0, spec.g0),
            ("d1", _values(spec.diffusion, one)[0] / t**spec.delta1, spec.d1),
            ("g1", _values(spec.reaction, one)[0] / t**spec.gamma1, spec.g1),
        ]
        for name, sampled, declared in pairs:
            rel = abs(sampled / declared - 1.0) if np.isfinite(sampled) else math.inf
            ok = rel <= LIMIT_RTOL
            report.add(f"limit {name} at {t:g}", ok, f"sampled {sampled:.6g} vs declared {declared:.6g}")
            if not ok:
                mismatches.append(f"{name}: sampled {sampled:.6g} vs declared {declared:.6g} at distance {t:g}")
    if mismatches:
        raise ExponentMismatch("declared endpoint power laws disagree with the functions: "
                               + "; ".join(mismatches))
    return report


def composite(spec: ProblemSpec) -> CompositeNonlinearity:
    """Return ``f = d*g`` with ``f0 = d0 g0``, ``f1 = d1 g1`` and the summed exponents."""
    return CompositeNonlinearity(
        f=_Product(spec.diffusion, spec.reaction),
        f0=spec.d0 * spec.g0,
        f1=spec.d1 * spec.g1,
        sigma0=spec.gamma0 + spec.delta0,
        sigma1=spec.gamma1 + spec.delta1,
    )


def _ratio_grid(samples):
    return np.union1d(chebyshev_grid(samples), np.geomspace(1e-12, 1e-2, 256))


def _golden_max(fn, a, b, rtol=1e-8):
    """Golden-section search for the maximum of a unimodal ``fn`` on [a, b]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - inv_phi * (b - a), a + inv_phi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > rtol * abs(x1):
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = fn(x2)
    return max(f1, f2)


def compute_mu(f: CompositeNonlinearity, samples: int = 4096) -> float:
    """``sup f(r)/r`` over (0, 1); ``inf`` when ``sigma0 < 1``.

    The discrete maximum over a clustered grid is refined by golden-section
    search and compared with the limit at ``r -> 0+`` (``f0`` when
    ``sigma0 == 1``, zero when ``sigma0 > 1``).
    """
    if f.sigma0 < 1:
        return math.inf
    r = _ratio_grid(samples)
    ratio = np.asarray(f(r), dtype=float) / r
    ratio = np.where(np.isfinite(ratio), ratio, -np.inf)
    k = int(np.argmax(ratio))
    best = float(ratio[k])
    if 0 < k < len(r) - 1:
        best = max(best, _golden_max(lambda x: float(f(x)) / x, r[k - 1], r[k + 1]))
    endpoint = f.f0 if f.sigma0 == 1 else 0.0
    return float(max(best, endpoint))


def growth_rate_condition(f: CompositeNonlinearity, c: float, delta: float,
                          samples: int = 512) -> bool:
    """Sampled test of ``f(r)/r >= c**2`` for all ``r`` in ``(0, delta)``.

    When it holds, no positive phase-plane solution exists at speed ``c``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    r = np.union1d(delta * chebyshev_grid(samples), delta * np.geomspace(1e-12, 1e-3, 64))
    ratio = np.asarray(f(r), dtype=float) / r
    return bool(np.all(ratio >= c * c))


class DiffusionPrimitive:
    """``D(s) = integral of d from 0 to s``, tabulated and interpolated monotonically.

    The table holds ``nodes`` equally spaced points on [0, 1]. Interior cells
    use adaptive vector quadrature; the two end cells factor out the declared
    power laws ``s**delta0`` and ``(1-s)**delta1`` so integrable
    singularities are handled exactly. Arguments are clipped to [0, 1].
    """

    def __init__(self, spec: ProblemSpec, nodes: int = 10001, epsabs: float = 1e-12):
        d = spec.diffusion
        s = np.linspace(0.0, 1.0, nodes)
        a, b = s[1:-2], s[2:-1]
        widths = b - a

        def cell(t):
            return np.asarray(d(a + t * widths), dtype=float) * widths

        inner, _ = integrate.quad_vec(cell, 0.0, 1.0, epsabs=epsabs, epsrel=1e-12, norm="max")
        # the weighted rules may sample the endpoint itself; use the declared limit there
        def near0(x):
            return spec.d0 if x <= 0.0 else float(d(x)) / x**spec.delta0

        def near1(x):
            return spec.d1 if x >= 1.0 else float(d(x)) / (1.0 - x) ** spec.delta1

        first, _ = integrate.quad(near0, 0.0, s[1], weight="alg", wvar=(spec.delta0, 0.0),
                                  epsabs=epsabs)
        last, _ = integrate.quad(near1, s[-2], 1.0, weight="alg", wvar=(0.0, spec.delta1),
                                 epsabs=epsabs)
        cells = np.concatenate([[first], np.atleast_1d(inner), [last]])
        self.nodes = s
        self.values = np.concatenate([[0.0], np.cumsum(cells)])
        self._interp = PchipInterpolator(self.nodes, self.values)
        # uniform nodes: locate cells arithmetically instead of by search
        self._coef = [np.ascontiguousarray(row) for row in self._interp.c]
        self._scale = nodes - 1

    def __call__(self, u):
        t = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * self._scale
        i = np.minimum(t.astype(np.intp), self._scale - 1)
        dx = (t - i) / self._scale
        c0, c1, c2, c3 = (row.take(i) for row in self._coef)
        out = ((c0 * dx + c1) * dx + c2) * dx + c3
        return out if out.ndim else float(out)
