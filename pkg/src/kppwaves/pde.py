"""Explicit finite differences for ``u_t = (D(u))_xx + g(u)``.

The diffusion term is discretised in divergence form through the primitive
``D``, so degenerate diffusion needs no special treatment and the scheme is
conservative. Dirichlet boundaries pin ``u = 1`` on the left and ``u = 0``
on the right; the zero-flux variant is used for conservation checks.

Long runs keep the front inside a fixed-size window: once the 1/2-crossing
passes 60% of the domain the grid is shifted by a whole number of cells so
the front sits at 40% again. ``x_grid`` always holds absolute coordinates.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUp, CFLViolation, FrontLost, InputError
from .problem import DiffusionPrimitive, ProblemSpec

SAFETY = 0.4
BLOWUP = 10.0
EDGE_CELLS = 10
RECENTER_AT = 0.6
RECENTER_TO = 0.4


@dataclass(frozen=True)
class SimulationState:
    """Grid values at time ``t`` plus the recorded ``(t, x_front)`` history."""

    x_grid: np.ndarray
    u: np.ndarray
    t: float = 0.0
    front_history: tuple = field(default=(), repr=False)

    @property
    def h(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    def history_array(self) -> np.ndarray:
        return np.array(self.front_history, dtype=float).reshape(-1, 2)


def smoothed_step(x: np.ndarray, h: float, width_cells: int = 10) -> np.ndarray:
    """1 for ``x < 0``, 0 for ``x > 0``, linear over ``width_cells * h`` around 0."""
    half = 0.5 * width_cells * h
    return np.clip(0.5 - x / (2.0 * half), 0.0, 1.0)


def initial_state(length: float = 200.0, h: float = 0.05, u0=None) -> SimulationState:
    """Uniform grid on ``[-0.4 L, 0.6 L]`` with a smoothed step at ``x = 0`` by default.

    ``u0`` may be an array matching the grid or a callable of ``x``.
    """
    n = int(round(length / h)) + 1
    x = -RECENTER_TO * length + h * np.arange(n)
    if u0 is None:
        u = smoothed_step(x, h)
    elif callable(u0):
        u = np.asarray(u0(x), dtype=float) * np.ones_like(x)
    else:
        u = np.array(u0, dtype=float)
        if u.shape != x.shape:
            raise InputError(f"initial data has shape {u.shape}, grid has {x.shape}")
    return SimulationState(x_grid=x, u=u, t=0.0)


class _Operator:
    """Right-hand side of the semi-discrete scheme for one spec."""

    def __init__(self, spec: ProblemSpec, primitive: DiffusionPrimitive | None = None):
        self.spec = spec
        self.D = primitive if primitive is not None else DiffusionPrimitive(spec)

    def max_diffusion(self, u):
        """Largest ``d`` over the attained values and a fine sweep of their range."""
        v = np.clip(u, 0.0, 1.0)
        probe = np.concatenate([v, np.linspace(v.min(), v.max(), 33)])
        with np.errstate(all="ignore"):
            d = np.asarray(self.spec.diffusion(probe), dtype=float)
        if not np.all(np.isfinite(d)):
            return math.inf
        return float(d.max())

    def stable_dt(self, u, h):
        dmax = self.max_diffusion(u)
        return SAFETY * h * h / dmax if dmax > 0 else math.inf

    def advance(self, u, h, dt, boundary="dirichlet"):
        Du = self.D(u)
        with np.errstate(all="ignore"):
            g = np.asarray(self.spec.reaction(np.clip(u, 0.0, 1.0)), dtype=float)
        new = np.empty_like(u)
        if boundary == "dirichlet":
            lap = (Du[2:] - 2.0 * Du[1:-1] + Du[:-2]) / (h * h)
            new[1:-1] = u[1:-1] + dt * (lap + g[1:-1])
            new[0], new[-1] = 1.0, 0.0
        elif boundary == "neumann":
            flux = np.concatenate([[0.0], np.diff(Du) / h, [0.0]])
            new[:] = u + dt * (np.diff(flux) / h + g)
        else:
            raise InputError(f"unknown boundary {boundary!r}")
        if not np.all(np.abs(new) <= BLOWUP):
            raise BlowUp(f"|u| exceeded {BLOWUP}; the step is unstable for this data")
        return new


@functools.lru_cache(maxsize=16)
def _operator_for(spec):
    return _Operator(spec)


def step(state: SimulationState, spec: ProblemSpec, dt: float, *, boundary="dirichlet",
         operator: _Operator | None = None) -> SimulationState:
    """Advance one explicit Euler step of size ``dt``.

    Raises
    ------
    CFLViolation
        If ``dt > 0.4 h**2 / max d`` over the range of ``u``.
    BlowUp
        If any value leaves ``[-10, 10]``.
    """
    op = operator if operator is not None else _operator_for(spec)
    h = state.h
    bound = op.stable_dt(state.u, h)
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.6g} exceeds the stability bound {bound:.6g}")
    u = op.advance(state.u, h, dt, boundary)
    return replace(state, u=u, t=state.t + dt)


def front_position(x: np.ndarray, u: np.ndarray, level: float = 0.5) -> float:
    """Rightmost ``level`` crossing of ``u`` by linear interpolation.

    Raises
    ------
    FrontLost
        Without a crossing, or when it lies within 10 cells of a boundary.
    """
    above = np.flatnonzero(u >= level)
    if above.size == 0 or above[-1] == len(u) - 1:
        raise FrontLost("no 1/2-crossing in the domain")
    i = above[-1]
    u0, u1 = u[i], u[i + 1]
    xf = x[i] + (u0 - level) / (u0 - u1) * (x[i + 1] - x[i])
    h = x[1] - x[0]
    if xf - x[0] < EDGE_CELLS * h or x[-1] - xf < EDGE_CELLS * h:
        raise FrontLost(f"front at x={xf:.6g} is within {EDGE_CELLS} cells of a boundary")
    return float(xf)


def measure_speed(state: SimulationState, window: float) -> tuple[float, float]:
    """Least-squares slope of ``x_front(t)`` over the trailing ``window`` time units.

    Returns the slope and its standard error.
    """
    if not state.front_history:
        front_position(state.x_grid, state.u)
        raise FrontLost("front history is empty")
    hist = state.history_array()
    t, xf = hist[:, 0], hist[:, 1]
    if t[-1] - t[0] < window * (1 - 1e-9):
        raise FrontLost(f"history spans {t[-1] - t[0]:.6g} time units, need {window:.6g}")
    mask = t >= t[-1] - window
    if np.count_nonzero(mask) < 3:
        raise FrontLost("too few front samples in the window")
    tt, xx = t[mask], xf[mask]
    A = np.vstack([tt, np.ones_like(tt)]).T
    coef = np.linalg.lstsq(A, xx, rcond=None)[0]
    n = len(tt)
    resid = xx - A @ coef
    sigma2 = float(resid @ resid) / max(n - 2, 1)
    stderr = math.sqrt(sigma2 / float(np.sum((tt - tt.mean()) ** 2)))
    return float(coef[0]), stderr


def _recenter(x, u, xf, length):
    h = x[1] - x[0]
    target = x[0] + RECENTER_TO * length
    shift = int(round((xf - target) / h))
    if shift <= 0:
        return x, u
    u = np.concatenate([u[shift:], np.zeros(shift)])
    u[0] = 1.0
    return x + shift * h, u


@dataclass
class SimulationResult:
    state: SimulationState
    c_measured: float
    stderr: float
    steps: int
    dt: float
    snapshots: dict = field(default_factory=dict, repr=False)


def simulate(spec: ProblemSpec, t_max: float = 200.0, *, h: float = 0.05,
             length: float = 200.0, dt: float | None = None, u0=None,
             record_every: float = 0.5, window: float | None = None,
             snapshot_times=(), primitive: DiffusionPrimitive | None = None) -> SimulationResult:
    """Run the front from the default (or given) initial data up to ``t_max``.

    The speed is measured over the trailing ``window`` (default ``t_max / 2``),
    so the first half of the run acts as burn-in. Snapshots are stored as
    ``{t: (x, u)}`` at the first step reaching each requested time.

    Raises
    ------
    CFLViolation, BlowUp, FrontLost
    """
    if t_max <= 0 or h <= 0 or length <= 0:
        raise InputError("t_max, h and length must be positive")
    op = _Operator(spec, primitive) if primitive is not None else _operator_for(spec)
    state = initial_state(length, h, u0)
    x, u = state.x_grid, state.u.copy()
    # u stays in [0, 1], so the bound over the whole range is valid throughout
    bound = op.stable_dt(np.array([0.0, 1.0]), h)
    if dt is None:
        dt = bound
        if not np.isfinite(dt) or dt <= 0:
            raise CFLViolation("diffusion is unbounded on [0, 1]; no stable explicit step")
    elif dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.6g} exceeds the stability bound {bound:.6g}")
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    every = max(1, int(round(record_every / dt)))
    pending = sorted(float(s) for s in snapshot_times)
    snapshots = {}
    history = [(0.0, front_position(x, u))]
    t = 0.0
    for k in range(1, n_steps + 1):
        u = op.advance(u, h, dt)
        t = k * dt
        while pending and t >= pending[0] - 1e-12:
            snapshots[pending.pop(0)] = (x.copy(), u.copy())
        if k % every == 0 or k == n_steps:
            xf = front_position(x, u)
            history.append((t, xf))
            if xf > x[0] + RECENTER_AT * length:
                x, u = _recenter(x, u, xf, length)
    state = SimulationState(x_grid=x, u=u, t=t, front_history=tuple(history))
    c, err = measure_speed(state, window if window is not None else t_max / 2)
    return SimulationResult(state=state, c_measured=c, stderr=err, steps=n_steps, dt=dt,
                            snapshots=snapshots)


def shape_error(state: SimulationState, wp, lo: float = 0.05, hi: float = 0.95) -> float:
    """Sup-distance between the recentred simulated front and a wave profile.

    Both are shifted so their 1/2-crossings sit at 0; the distance is taken
    at the profile samples with ``lo <= U <= hi``.
    """
    xf = front_position(state.x_grid, state.u)
    ref = wp.normalized()
    mask = (ref.U >= lo) & (ref.U <= hi)
    sim = np.interp(ref.z[mask], state.x_grid - xf, state.u)
    return float(np.max(np.abs(sim - ref.U[mask])))
