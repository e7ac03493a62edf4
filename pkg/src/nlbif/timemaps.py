"""Amplitudes and time maps of the stationary Chafee-Infante equation.

Along a stationary profile ``u'**2/2 + lam*F(u) = lam*E``.  A positive hump
of energy ``E`` rises from 0 to ``U+(E)`` and back; its x-length is

    tau_lam^+(E) = sqrt(2/lam) * int_0^{U+} (E - F(u))**-0.5 du,

and likewise for negative humps.  Integrals are evaluated at ``lam = 1`` and
scaled by ``lam**-0.5``.  The substitution ``u = U*sin(theta)`` removes the
inverse square-root endpoint singularity; the smooth remainder is handled by
Gauss-Legendre with node doubling.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import optimize

from .model import Nonlinearity

__all__ = [
    "ENERGY_CUTOFF",
    "QuadratureError",
    "energy_max",
    "energy_ceiling",
    "amplitude",
    "tau",
    "composite_time",
    "hump_counts",
    "arch_integral",
    "time_map_sample",
    "sides_for",
    "TimeMapSample",
]

# Work strictly below the heteroclinic level; the time maps blow up there.
ENERGY_CUTOFF = 1e-6
BASE_NODES = 64
MAX_NODES = 1 << 14
QUAD_RTOL = 1e-11


class QuadratureError(ArithmeticError):
    """Node doubling did not converge (energy too close to the ceiling)."""


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be +1 or -1, got {sign!r}")


def energy_max(nl: Nonlinearity, j: int | None = None, sign=1) -> float:
    """Heteroclinic energy level bounding the class-``(j, sign)`` profiles.

    ``min(F(z+), F(z-))`` once both hump signs occur; a single hump (``j = 1``)
    only needs ``F(z^sign)``.
    """
    if j == 1:
        z = nl.z_plus if _sign(sign) > 0 else nl.z_minus
        e = float(nl.F(np.array(z)))
    else:
        e = nl.energy_max
    if not (e > 0 and math.isfinite(e)):
        raise ValueError("nonlinearity has no usable energy range")
    return e


def energy_ceiling(nl: Nonlinearity, j: int | None = None, sign=1) -> float:
    return (1.0 - ENERGY_CUTOFF) * energy_max(nl, j, sign)


@lru_cache(maxsize=None)
def _theta_rule(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    theta = 0.25 * math.pi * (x + 1.0)
    w = 0.25 * math.pi * w
    s = np.sin(theta)
    c = np.cos(theta)
    one_minus = c * c / (1.0 + s)
    for arr in (w, s, c, one_minus):
        arr.setflags(write=False)
    return w, s, c, one_minus


def amplitude(nl: Nonlinearity, E: float, sign=1) -> float:
    """Unique ``U`` between 0 and the zero of ``f`` on the ``sign`` side with ``F(U) = E``."""
    sg = _sign(sign)
    emax = energy_max(nl, 1, sg)
    if not (0.0 < E < emax):
        raise ValueError(f"energy {E!r} outside (0, {emax!r})")
    z = nl.z_plus if sg > 0 else nl.z_minus

    def g(u):
        return float(nl.F(np.array(u))) - E

    U = optimize.brentq(g, 0.0, z, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(U)


def _tau1_fixed(nl: Nonlinearity, U: float, n: int) -> float:
    w, s, c, om = _theta_rule(n)
    gap = nl.F_gap(U, s, om)
    return math.sqrt(2.0) * abs(U) * float(np.sum(w * c / np.sqrt(gap)))


def _arch_fixed(nl: Nonlinearity, U: float, n: int) -> float:
    w, s, c, om = _theta_rule(n)
    gap = nl.F_gap(U, s, om)
    return abs(U) * float(np.sum(w * c * np.sqrt(gap)))


def _adaptive(fn, nl: Nonlinearity, U: float, nodes: int | None) -> tuple[float, int]:
    if nodes is not None:
        return fn(nl, U, nodes), nodes
    n = BASE_NODES
    prev = fn(nl, U, n)
    while n < MAX_NODES:
        n *= 2
        cur = fn(nl, U, n)
        if abs(cur - prev) <= QUAD_RTOL * abs(cur):
            return cur, n
        prev = cur
    raise QuadratureError(f"time-map quadrature did not converge at U={U!r}")


def tau(nl: Nonlinearity, E: float, lam: float = 1.0, sign=1, *,
        nodes: int | None = None) -> float:
    """Length of one hump of sign ``sign`` at energy ``E`` and parameter ``lam``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    U = amplitude(nl, E, sign)
    t1, _ = _adaptive(_tau1_fixed, nl, U, nodes)
    return t1 / math.sqrt(lam)


def arch_integral(nl: Nonlinearity, E: float, sign=1, *, nodes: int | None = None) -> float:
    """``int |E - F(u)|**0.5 du`` between 0 and ``U^sign(E)``."""
    U = amplitude(nl, E, sign)
    val, _ = _adaptive(_arch_fixed, nl, U, nodes)
    return val


def hump_counts(j: int, sign=1) -> tuple[int, int]:
    """(positive humps, negative humps) of the class-``j`` profile starting with ``sign``."""
    if j < 1:
        raise ValueError("nodal class j must be >= 1")
    lead, trail = (j + 1) // 2, j // 2
    return (lead, trail) if _sign(sign) > 0 else (trail, lead)


def composite_time(nl: Nonlinearity, E: float, lam: float, j: int, sign=1, *,
                   nodes: int | None = None) -> float:
    """Total x-length of the ``j`` alternating humps; equals pi at an equilibrium."""
    n_pos, n_neg = hump_counts(j, sign)
    tp = tau(nl, E, lam, 1, nodes=nodes) if n_pos else 0.0
    if n_neg and nl.is_odd:
        tm = tp if n_pos else tau(nl, E, lam, -1, nodes=nodes)
    else:
        tm = tau(nl, E, lam, -1, nodes=nodes) if n_neg else 0.0
    return n_pos * tp + n_neg * tm


class TimeMapSample:
    """Amplitudes and unit-parameter hump lengths at one energy."""

    __slots__ = ("E", "U_plus", "U_minus", "tau_plus", "tau_minus", "arch_plus", "arch_minus", "nodes")

    def __init__(self, E, U_plus, U_minus, tau_plus, tau_minus, arch_plus, arch_minus, nodes):
        self.E = E
        self.U_plus = U_plus
        self.U_minus = U_minus
        self.tau_plus = tau_plus
        self.tau_minus = tau_minus
        self.arch_plus = arch_plus
        self.arch_minus = arch_minus
        self.nodes = nodes

    def composite(self, j: int, sign=1, lam: float = 1.0) -> float:
        n_pos, n_neg = hump_counts(j, sign)
        return (n_pos * self.tau_plus + n_neg * self.tau_minus) / math.sqrt(lam)

    def __repr__(self) -> str:
        return (f"TimeMapSample(E={self.E!r}, U=({self.U_plus!r}, {self.U_minus!r}), "
                f"tau=({self.tau_plus!r}, {self.tau_minus!r}))")


def time_map_sample(nl: Nonlinearity, E: float, *, nodes: int | None = None,
                    sides: tuple[int, ...] = (1, -1)) -> TimeMapSample:
    """Everything at energy ``E`` (``lam = 1``) needed by the Chafee-Infante solver.

    Only the hump signs in ``sides`` are computed; the others are ``nan``.
    With ``nodes`` given, every integral uses that fixed rule, which makes the
    result a smooth function of ``E`` suitable for finite differences.
    """
    nan = math.nan
    Up = tp = ap = Um = tm = am = nan
    used = [0]
    if 1 in sides or nl.is_odd:
        Up = amplitude(nl, E, 1)
        tp, n1 = _adaptive(_tau1_fixed, nl, Up, nodes)
        ap, n2 = _adaptive(_arch_fixed, nl, Up, nodes)
        used += [n1, n2]
    if -1 in sides:
        if nl.is_odd:
            Um, tm, am = -Up, tp, ap
        else:
            Um = amplitude(nl, E, -1)
            tm, n3 = _adaptive(_tau1_fixed, nl, Um, nodes)
            am, n4 = _adaptive(_arch_fixed, nl, Um, nodes)
            used += [n3, n4]
    return TimeMapSample(E, Up, Um, tp, tm, ap, am, max(used))


def sides_for(j: int, sign=1) -> tuple[int, ...]:
    """Hump signs present in a class-``(j, sign)`` profile."""
    n_pos, n_neg = hump_counts(j, sign)
    return tuple(s for s, k in ((1, n_pos), (-1, n_neg)) if k)
