"""Equilibria of the local problem ``u_xx + lam*f(u) = 0`` on (0, pi).

For nodal class ``j`` (``j - 1`` interior zeros) and initial slope sign, the
equilibrium is fixed by the energy ``E`` at which the alternating humps fill
``[0, pi]`` exactly.  Everything else (profile, gradient energy ``r``) follows
from ``E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .model import Nonlinearity
from .timemaps import (
    _sign,
    composite_time,
    energy_ceiling,
    hump_counts,
    sides_for,
    time_map_sample,
)

__all__ = [
    "EquilibriumCI",
    "NoSolutionError",
    "solve_energy",
    "lam_and_r",
    "gradient_energy",
    "reconstruct_profile",
    "PROFILE_POINTS",
]

PROFILE_POINTS = 4096
_E_FLOOR = 1e-15


class NoSolutionError(ValueError):
    """No class-``j`` equilibrium for the requested parameter."""


@dataclass(frozen=True)
class EquilibriumCI:
    """A sampled Chafee-Infante equilibrium.

    ``r`` comes from the arch formula; ``r_grid`` is the quadrature of the
    sampled ``phi_x**2`` and serves as its cross-check.
    """

    j: int
    sign: int
    lam: float
    E: float
    r: float
    x: np.ndarray
    phi: np.ndarray
    phi_x: np.ndarray
    r_grid: float

    def interior_sign_changes(self) -> int:
        v = self.phi[1:-1]
        scale = np.max(np.abs(v))
        s = np.sign(v[np.abs(v) > 1e-9 * scale])
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def energy_defect(self, nl: Nonlinearity) -> float:
        """Max deviation from ``phi_x**2/2 + lam*F(phi) = lam*E`` on the grid."""
        lhs = 0.5 * self.phi_x**2 + self.lam * nl.F(self.phi)
        return float(np.max(np.abs(lhs - self.lam * self.E)))


def lam_and_r(nl: Nonlinearity, E: float, j: int, sign=1, *,
              nodes: int | None = None) -> tuple[float, float]:
    """Parameter and gradient energy of the class-``(j, sign)`` equilibrium at energy ``E``.

    Explicit in ``E``: ``sqrt(lam) = T_1(E)/pi`` and each hump contributes
    ``2*sqrt(2*lam)*int sqrt(E - F)`` (two monotone halves, ``dx = du/phi_x``).
    """
    s = time_map_sample(nl, E, nodes=nodes, sides=sides_for(j, sign))
    return _lam_r_from_sample(s, j, sign)


def _lam_r_from_sample(s, j: int, sign) -> tuple[float, float]:
    n_pos, n_neg = hump_counts(j, sign)
    t = (n_pos * s.tau_plus if n_pos else 0.0) + (n_neg * s.tau_minus if n_neg else 0.0)
    arch = (n_pos * s.arch_plus if n_pos else 0.0) + (n_neg * s.arch_minus if n_neg else 0.0)
    lam = (t / math.pi) ** 2
    return lam, 2.0 * math.sqrt(2.0 * lam) * arch


def solve_energy(nl: Nonlinearity, lam: float, j: int, sign=1) -> float:
    """Energy ``E`` with composite time equal to pi; requires ``lam > j**2``."""
    sg = _sign(sign)
    if lam <= j * j:
        raise NoSolutionError(f"lam={lam!r} <= j**2={j * j}: class {j} does not exist")
    target = math.pi * math.sqrt(lam)
    e_hi = energy_ceiling(nl, j, sg)

    def g(E):
        return composite_time(nl, E, 1.0, j, sg) - target

    e_lo = _E_FLOOR * e_hi
    if g(e_lo) >= 0:
        raise NoSolutionError(f"lam={lam!r} too close to j**2 for the energy floor")
    g_hi = g(e_hi)
    if abs(g_hi) <= 1e-13 * target:
        return e_hi  # parameter sits on the ceiling itself
    if g_hi < 0:
        raise NoSolutionError(
            f"lam={lam!r} beyond the energy horizon for class {j} (E would exceed the ceiling)")
    return float(optimize.brentq(g, e_lo, e_hi, xtol=1e-300, rtol=1e-15, maxiter=300))


def gradient_energy(nl: Nonlinearity, lam: float, j: int, sign=1) -> float:
    """``||phi_x||**2`` of the class-``(j, sign)`` equilibrium at parameter ``lam``."""
    E = solve_energy(nl, lam, j, sign)
    return lam_and_r(nl, E, j, sign)[1]


def _integrate_ivp(nl: Nonlinearity, lam: float, v0: float, x: np.ndarray, rtol: float):
    def rhs(_, y):
        return (y[1], -lam * float(nl.f(np.array(y[0]))))

    sol = integrate.solve_ivp(rhs, (0.0, float(x[-1])), (0.0, v0), method="DOP853",
                              t_eval=x, rtol=rtol, atol=rtol * abs(v0) * 1e-2)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0], sol.y[1]


def reconstruct_profile(nl: Nonlinearity, lam: float, j: int, sign=1, E: float | None = None,
                        n: int = PROFILE_POINTS) -> EquilibriumCI:
    """Sample the equilibrium on ``n + 1`` uniform points of ``[0, pi]``.

    Shoots ``u'' = -lam*f(u)`` from ``u(0) = 0``, ``u'(0) = sign*sqrt(2*lam*E)``.
    """
    sg = _sign(sign)
    if E is None:
        E = solve_energy(nl, lam, j, sg)
    x = np.linspace(0.0, math.pi, n + 1)
    v0 = sg * math.sqrt(2.0 * lam * E)
    tol = 1e-7 * abs(v0)
    for rtol in (1e-12, 1e-13):
        phi, phi_x = _integrate_ivp(nl, lam, v0, x, rtol)
        if abs(phi[-1]) <= tol:
            break
    else:
        raise RuntimeError(f"shooting endpoint miss |phi(pi)|={abs(phi[-1]):.3e} > {tol:.3e}")
    phi[0] = 0.0
    _, r = lam_and_r(nl, E, j, sg)
    r_grid = float(integrate.simpson(phi_x**2, x=x)) if n % 2 == 0 else float(np.trapezoid(phi_x**2, x))
    return EquilibriumCI(j=j, sign=sg, lam=lam, E=E, r=r, x=x, phi=phi, phi_x=phi_x, r_grid=r_grid)
