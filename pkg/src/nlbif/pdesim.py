"""Method-of-lines simulation with a Lyapunov monitor.

Grid: ``n`` uniform intervals on ``[0, pi]``; the state holds the ``n - 1``
interior values (Dirichlet ends are zero).  The gradient energy is the
discrete ``H^1`` seminorm ``r_h = h * sum(((u_{k+1} - u_k)/h)**2)`` over all
``n`` differences, and

    V_h(u) = A(r_h)/2 - nu * h * sum(F(u_k)).

With this ``r_h`` the semi-discrete flow ``u' = a(r_h) D2 u + nu f(u)`` is
exactly the gradient flow of ``V_h`` (``dV_h/dt = -h |u'|^2``), so the
monitor checks a property the discrete system really has.

Steps are IMEX: diffusion implicit with ``a`` frozen at the step start,
reaction explicit; each step is one tridiagonal solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .model import Diffusion, Nonlinearity, PrimitiveA, build_primitive_a

__all__ = [
    "SimModel",
    "SimState",
    "TrajectoryLog",
    "grid",
    "initial_state",
    "gradient_energy_h",
    "lyapunov",
    "step",
    "evolve",
    "residual",
    "h1_distance",
    "DEFAULT_N",
    "DT0",
]

DEFAULT_N = 1024
DT0 = 1e-3
DT_MIN = 1e-10
FORMS = ("quasilinear", "semilinear")


@dataclass(frozen=True)
class SimModel:
    nl: Nonlinearity
    a: Diffusion
    nu: float
    A: PrimitiveA = field(default=None, repr=False)

    def __post_init__(self):
        if self.A is None:
            object.__setattr__(self, "A", build_primitive_a(self.a))


def grid(n: int = DEFAULT_N) -> np.ndarray:
    return np.linspace(0.0, math.pi, n + 1)


def gradient_energy_h(u: np.ndarray, h: float) -> float:
    """Discrete ``||u_x||^2`` with zero boundary values."""
    du = np.diff(u, prepend=0.0, append=0.0)
    return float(np.dot(du, du) / h)


def _V(model: SimModel, u: np.ndarray, h: float, r: float) -> float:
    return 0.5 * float(model.A(r)) - model.nu * h * float(np.sum(model.nl.F(u)))


@dataclass(frozen=True)
class SimState:
    """Interior values ``u``, time, current step size and cached ``r``, ``V``."""

    u: np.ndarray = field(repr=False)
    t: float
    dt: float
    h: float
    r: float
    V: float

    @property
    def n(self) -> int:
        return self.u.size + 1

    def full(self) -> np.ndarray:
        return np.concatenate([[0.0], self.u, [0.0]])


def initial_state(u0, model: SimModel, n: int = DEFAULT_N, dt: float = DT0) -> SimState:
    """State from a callable of ``x`` or an array on the ``n + 1`` grid points."""
    x = grid(n)
    vals = np.asarray(u0(x) if callable(u0) else u0, dtype=float)
    if vals.size != n + 1:
        raise ValueError(f"initial data has {vals.size} values, grid has {n + 1}")
    u = vals[1:-1].copy()
    h = math.pi / n
    r = gradient_energy_h(u, h)
    return SimState(u=u, t=0.0, dt=dt, h=h, r=r, V=_V(model, u, h, r))


def lyapunov(state: SimState, model: SimModel) -> float:
    """``V = A(||u_x||^2)/2 - nu * int F(u)`` (trapezoid; boundary terms vanish)."""
    r = gradient_energy_h(state.u, state.h)
    return _V(model, state.u, state.h, r)


def _d2(u: np.ndarray, h: float) -> np.ndarray:
    full = np.concatenate([[0.0], u, [0.0]])
    return (full[2:] - 2.0 * full[1:-1] + full[:-2]) / (h * h)


def residual(state: SimState, model: SimModel, form: str = "quasilinear") -> float:
    """Max-norm of the right-hand side, i.e. of ``u_t``."""
    a_val = float(model.a.a(np.asarray(state.r)))
    rhs = a_val * _d2(state.u, state.h) + model.nu * model.nl.f(state.u)
    if form == "semilinear":
        rhs = rhs / a_val
    return float(np.max(np.abs(rhs)))


def step(state: SimState, model: SimModel, form: str = "quasilinear",
         dt: float | None = None) -> SimState:
    """One IMEX step of size ``dt`` (default ``state.dt``).

    quasilinear: ``(I - dt a(r_n) D2) u' = u + dt nu f(u)``;
    semilinear:  ``(I - dt D2) w' = w + dt nu f(w)/a(r_n)``.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    dt = state.dt if dt is None else dt
    a_val = float(model.a.a(np.asarray(state.r)))
    if form == "quasilinear":
        coef, react = a_val, model.nu * model.nl.f(state.u)
    else:
        coef, react = 1.0, model.nu * model.nl.f(state.u) / a_val
    m = state.u.size
    k = dt * coef / state.h**2
    ab = np.empty((3, m))
    ab[0, :] = -k
    ab[1, :] = 1.0 + 2.0 * k
    ab[2, :] = -k
    u = linalg.solve_banded((1, 1), ab, state.u + dt * react, check_finite=False)
    r = gradient_energy_h(u, state.h)
    return SimState(u=u, t=state.t + dt, dt=state.dt, h=state.h, r=r, V=_V(model, u, state.h, r))


def h1_distance(u: np.ndarray, v: np.ndarray, h: float) -> float:
    """Discrete ``H^1_0`` seminorm of ``u - v`` (interior arrays)."""
    return math.sqrt(gradient_energy_h(u - v, h))


@dataclass
class TrajectoryLog:
    """Per-accepted-step record of a run."""

    times: list = field(default_factory=list)
    V: list = field(default_factory=list)
    dist_max: list = field(default_factory=list)
    dist_h1: list = field(default_factory=list)
    nearest: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    terminal: str = "unresolved"
    t_converged: float = math.nan
    final: SimState | None = None
    rejected: int = 0
    tol_V_scale: float = 1e-8

    def max_V_increase(self) -> float:
        """Largest ``V_{k+1} - V_k - tol_V(V_k)``; non-positive means monotone."""
        v = np.asarray(self.V)
        if v.size < 2:
            return -math.inf
        return float(np.max(v[1:] - v[:-1] - self.tol_V_scale * (1.0 + np.abs(v[:-1]))))

    def rows(self):
        for row in zip(self.times, self.V, self.dist_max, self.dist_h1, self.nearest, self.dt):
            yield row


def evolve(u0, model: SimModel, form: str = "quasilinear", t_end: float = 20.0, *,
           equilibria: dict[str, np.ndarray] | None = None, n: int = DEFAULT_N,
           dt0: float = DT0, tol_dist: float = 1e-4, tol_res: float = 1e-6,
           tol_V: float = 1e-8, check_every: int = 10, stop_on_convergence: bool = True
           ) -> TrajectoryLog:
    """Integrate until convergence to a listed equilibrium or ``t_end``.

    Args:
        equilibria: id -> profile on the ``n + 1`` grid points.  Convergence
            means ``H^1`` distance ``< tol_dist`` to one of them and residual
            ``< tol_res``.
        tol_V: relative Lyapunov tolerance; a step raising ``V`` by more than
            ``tol_V*(1 + |V|)`` is rejected and retried with half the step.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    state = initial_state(u0, model, n, dt0)
    eq = {k: np.asarray(v, dtype=float)[1:-1] for k, v in (equilibria or {}).items()}
    for k, v in eq.items():
        if v.size != n - 1:
            raise ValueError(f"equilibrium {k!r} not on the simulation grid")
    log = TrajectoryLog(tol_V_scale=tol_V)

    def record(s: SimState):
        log.times.append(s.t)
        log.V.append(s.V)
        log.dt.append(s.dt)
        if eq:
            dists = {k: h1_distance(s.u, v, s.h) for k, v in eq.items()}
            best = min(dists, key=dists.get)
            log.nearest.append(best)
            log.dist_h1.append(dists[best])
            log.dist_max.append(float(np.max(np.abs(s.u - eq[best]))))
        else:
            log.nearest.append("")
            log.dist_h1.append(math.nan)
            log.dist_max.append(math.nan)

    record(state)
    k = 0
    while state.t < t_end - 1e-12:
        dt = min(state.dt, t_end - state.t)
        new = step(state, model, form, dt)
        if new.V > state.V + tol_V * (1.0 + abs(state.V)):
            log.rejected += 1
            half = state.dt / 2
            if half < DT_MIN:
                raise FloatingPointError(f"step size underflow at t={state.t:.6g}")
            state = SimState(u=state.u, t=state.t, dt=half, h=state.h, r=state.r, V=state.V)
            continue
        state = SimState(u=new.u, t=new.t, dt=state.dt, h=new.h, r=new.r, V=new.V)
        record(state)
        k += 1
        if eq and k % check_every == 0 and log.dist_h1[-1] < tol_dist:
            if residual(state, model, form) < tol_res:
                if log.terminal == "unresolved":
                    log.terminal = log.nearest[-1]
                    log.t_converged = state.t
                if stop_on_convergence:
                    break
    log.final = state
    return log
