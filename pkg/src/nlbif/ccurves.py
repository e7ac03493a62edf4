"""Characteristic curves ``c_j^sign(r) = 1/lam_{j,r}``.

``lam_{j,r}`` is the parameter at which the class-``(j, sign)`` local
equilibrium has gradient energy ``r``.  Nonlocal equilibria are the solutions
of ``nu*c(r) = a(r)``.

The pair ``(lam, r)`` is explicit in the energy ``E`` (see
``chafee_infante.lam_and_r``), so each sample costs a single scalar root
solve in ``E``.  The interpolant is a cubic Hermite spline of ``lam(r)`` with
derivatives from finite differences in ``E`` on a fixed quadrature rule;
``lam`` grows like ``r**2`` for large ``r``, which a cubic reproduces far
better than ``c`` itself.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicHermiteSpline

from .chafee_infante import _lam_r_from_sample
from .model import Nonlinearity
from .timemaps import _sign, energy_ceiling, energy_max, sides_for, time_map_sample

__all__ = [
    "CCurve",
    "HorizonError",
    "build_ccurve",
    "build_ccurves",
    "ccurve_derivative",
    "check_scaling_identities",
    "HOLDOUT_TOL",
]

HOLDOUT_TOL = 1e-7


class HorizonError(ValueError):
    """Requested ``r`` range exceeds what the energy ceiling allows."""

    def __init__(self, msg: str, achievable: tuple[float, float]):
        super().__init__(msg)
        self.achievable = achievable


class _Param:
    """``E -> (lam, r)`` and its ``E``-derivatives for one class on a fixed rule."""

    def __init__(self, nl: Nonlinearity, j: int, sign: int, nodes: int):
        self.nl, self.j, self.sign, self.nodes = nl, j, sign, nodes
        self.sides = sides_for(j, sign)
        self.e_top = energy_max(nl, j, sign)

    def __call__(self, E: float) -> tuple[float, float]:
        s = time_map_sample(self.nl, E, nodes=self.nodes, sides=self.sides)
        return _lam_r_from_sample(s, self.j, self.sign)

    def with_slopes(self, E: float) -> tuple[float, float, float, float]:
        """``lam, r, dlam/dE, dr/dE`` with a five-point stencil."""
        h = 1e-3 * min(E, self.e_top - E)
        vals = [self(E + k * h) for k in (-2, -1, 1, 2)]
        lam, r = self(E)
        (l2, r2), (l1, r1), (p1, q1), (p2, q2) = vals
        dl = (l2 - 8 * l1 + 8 * p1 - p2) / (12 * h)
        dr = (r2 - 8 * r1 + 8 * q1 - q2) / (12 * h)
        return lam, r, dl, dr


@dataclass(frozen=True)
class CCurve:
    """Sampled, invertible ``r -> c_j^sign(r)`` on ``[0, r_max]``.

    Samples include the anchor ``r = 0`` (``c = 1/j**2``).  ``exact`` re-solves
    for an arbitrary ``r`` instead of interpolating.
    """

    nl: Nonlinearity = field(repr=False)
    j: int
    sign: int
    r_max: float
    r_reach: float
    nodes: int
    r: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    dlam: np.ndarray = field(repr=False)
    holdout_error: float
    monotone: bool
    _spline: CubicHermiteSpline = field(repr=False, compare=False)

    @property
    def c(self) -> np.ndarray:
        return 1.0 / self.lam

    @property
    def dc(self) -> np.ndarray:
        return -self.dlam / self.lam**2

    @property
    def slope_at_zero(self) -> float:
        """Observed ``c'(0+)``."""
        return float(self.dc[0])

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max * (1 + 1e-12)):
            raise ValueError(f"r outside [0, {self.r_max}]")
        return r

    def lam_at(self, r):
        return self._spline(self._check(r))

    def __call__(self, r):
        return 1.0 / self.lam_at(r)

    def derivative(self, r):
        r = self._check(r)
        lam = self._spline(r)
        return -self._spline(r, 1) / lam**2

    def second_derivative(self, r):
        r = self._check(r)
        lam, d1, d2 = self._spline(r), self._spline(r, 1), self._spline(r, 2)
        return 2 * d1**2 / lam**3 - d2 / lam**2

    def _param(self) -> _Param:
        return _Param(self.nl, self.j, self.sign, self.nodes)

    def energy_at(self, r: float) -> float:
        """Energy of the equilibrium with gradient energy ``r`` (root solve)."""
        r = float(self._check(r))
        if r == 0.0:
            return 0.0
        if r >= self.r[-1]:
            return float(self.E[-1])  # rounding past the last sample
        k = int(np.searchsorted(self.r, r))
        if self.r[k] == r:
            return float(self.E[k])
        lo, hi = self.E[k - 1], self.E[k]
        p = self._param()
        if lo == 0.0:
            lo = 1e-12 * hi
            r_lo = p(lo)[1]
            if r <= r_lo:
                return lo * r / r_lo  # r is linear in E this close to zero
        return float(optimize.brentq(lambda e: p(e)[1] - r, lo, hi, xtol=1e-300, rtol=1e-15))

    def state(self, E: float) -> tuple[float, float, float]:
        """Exact ``(lam, r, dlam/dr)`` at energy ``E``."""
        if E == 0.0:
            return float(self.j**2), 0.0, float(self.dlam[0])
        lam, r, dl, dr = self._param().with_slopes(E)
        return lam, r, dl / dr

    def exact(self, r: float) -> tuple[float, float]:
        """``(c(r), c'(r))`` from a fresh root solve, bypassing the interpolant."""
        lam, _, dlam = self.state(self.energy_at(r))
        return 1.0 / lam, -dlam / lam**2

    def table(self) -> np.ndarray:
        """Columns ``r, lam, c, dc/dr, E``."""
        return np.column_stack([self.r, self.lam, self.c, self.dc, self.E])


def _coarse_scan(p: _Param, e_ceil: float) -> tuple[np.ndarray, np.ndarray]:
    u = np.unique(np.concatenate([
        np.geomspace(1e-12, 0.5, 60),
        1.0 - np.geomspace(0.5, 1e-9, 50),
        [1.0],
    ]))
    E = u * e_ceil
    r = np.array([p(e)[1] for e in E])
    return E, r


def build_ccurve(nl: Nonlinearity, j: int, sign=1, r_max: float | None = None, *,
                 samples: int = 200, r_min_frac: float = 1e-4, nodes: int = 256,
                 clip: bool = False, max_rounds: int = 8,
                 holdout_tol: float = HOLDOUT_TOL) -> CCurve:
    """Sample and interpolate ``c_j^sign`` on ``[0, r_max]``.

    Targets are log-spaced in ``r``; each is matched by bracketed root solving
    in ``E``.  The interpolant is checked against held-out energy midpoints
    and the midpoint is promoted to a sample wherever the error exceeds
    ``holdout_tol/4`` relative to ``c``.

    Args:
        r_max: upper end of the curve; ``None`` uses the largest ``r`` the
            energy ceiling allows.
        clip: shrink an unreachable ``r_max`` to the reachable one instead of
            raising ``HorizonError``.
    """
    sg = _sign(sign)
    p = _Param(nl, j, sg, nodes)
    E_scan, r_scan = _coarse_scan(p, energy_ceiling(nl, j, sg))
    if np.any(np.diff(r_scan) <= 0):
        raise ArithmeticError(f"gradient energy not increasing along the energy scan (j={j})")
    r_reach = float(r_scan[-1])
    if r_max is None or (clip and r_max > r_reach):
        r_max = r_reach
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if r_max > r_reach:
        raise HorizonError(
            f"r_max={r_max} unreachable for class ({j},{sg:+d}); achievable r in (0, {r_reach:.6g}]",
            (0.0, r_reach))

    targets = np.geomspace(r_min_frac * r_max, r_max, samples)
    idx = np.searchsorted(r_scan, targets)
    E_s = np.empty(samples)
    for k, (rt, i) in enumerate(zip(targets, idx)):
        if r_scan[i] == rt:
            E_s[k] = E_scan[i]
            continue
        E_s[k] = optimize.brentq(lambda e: p(e)[1] - rt, E_scan[i - 1], E_scan[i],
                                 xtol=1e-300, rtol=1e-15)
    rows = np.array([p.with_slopes(e) for e in E_s])
    E_s = E_s.copy()

    for _ in range(max_rounds):
        lam_s, r_s = rows[:, 0], rows[:, 1]
        dlam_dr = rows[:, 2] / rows[:, 3]
        # Slope at r = 0 by quadratic extrapolation of the first samples.
        d0 = float(np.polyval(np.polyfit(r_s[:3], dlam_dr[:3], 2), 0.0))
        r_all = np.concatenate([[0.0], r_s])
        lam_all = np.concatenate([[float(j * j)], lam_s])
        dlam_all = np.concatenate([[d0], dlam_dr])
        E_all = np.concatenate([[0.0], E_s])
        spline = CubicHermiteSpline(r_all, lam_all, dlam_all)

        mids = 0.5 * (E_all[1:] + E_all[:-1])
        held = np.array([p(e) for e in mids])
        c_true = 1.0 / held[:, 0]
        errs = np.abs(1.0 / spline(np.minimum(held[:, 1], r_max)) - c_true)
        err = float(np.max(errs))
        # Relative criterion: c is small at large r and feeds ratio identities.
        bad = errs > 0.25 * holdout_tol * c_true
        if not bad.any():
            break
        new_E = mids[bad]
        new_rows = np.array([p.with_slopes(e) for e in new_E])
        order = np.argsort(np.concatenate([E_s, new_E]))
        E_s = np.concatenate([E_s, new_E])[order]
        rows = np.concatenate([rows, new_rows])[order]

    monotone = bool(np.all(dlam_all > 0) and _hermite_monotone(r_all, lam_all, dlam_all))
    return CCurve(nl=nl, j=j, sign=sg, r_max=float(r_max), r_reach=r_reach, nodes=nodes,
                  r=r_all, E=E_all, lam=lam_all, dlam=dlam_all, holdout_error=err,
                  monotone=monotone, _spline=spline)


def _hermite_monotone(x, y, m) -> bool:
    """Fritsch-Carlson sufficient condition for a monotone cubic Hermite piece."""
    delta = np.diff(y) / np.diff(x)
    if np.any(delta <= 0):
        return False
    a, b = m[:-1] / delta, m[1:] / delta
    return bool(np.all((a >= 0) & (b >= 0) & (a * a + b * b <= 9.0)))


def build_ccurves(nl: Nonlinearity, j_max: int = 4, r_max: float | None = None, *,
                  jobs: int = 1, **kw) -> dict[tuple[int, int], CCurve]:
    """Curves for ``j = 1..j_max`` and both signs, keyed ``(j, sign)``.

    Odd ``f`` gives identical ``+``/``-`` curves; they are still built
    separately so each can be checked against the other.
    """
    keys = [(j, s) for j in range(1, j_max + 1) for s in (1, -1)]

    def one(key):
        return build_ccurve(nl, key[0], key[1], r_max, **kw)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            built = list(ex.map(one, keys))
    else:
        built = [one(k) for k in keys]
    return dict(zip(keys, built))


def ccurve_derivative(curve: CCurve, r):
    """``c'(r)`` of the interpolant."""
    return curve.derivative(r)


def check_scaling_identities(curves: dict[tuple[int, int], CCurve], n_points: int = 100,
                             exact: bool = False) -> dict:
    """Max relative deviation of the rescaling identities over a shared ``r`` grid.

    ``c_{2k}(r) = c_2(r/k**2)/k**2`` holds for every ``f``; for odd ``f`` also
    ``c_j(r) = c_1(r/j**2)/j**2`` and ``c_j^+ = c_j^-``.
    """
    def value(curve, r):
        if exact:
            return np.array([curve.exact(float(x))[0] for x in np.atleast_1d(r)])
        return curve(r)

    report: dict = {"even": {}, "odd": {}, "sign": {}}
    any_curve = next(iter(curves.values()))
    is_odd = any_curve.nl.is_odd
    for (jj, s), cj in sorted(curves.items()):
        if jj % 2 == 0 and jj > 2 and (2, s) in curves:
            k = jj // 2
            base = curves[(2, s)]
            r = np.linspace(0.0, min(cj.r_max, base.r_max * k * k), n_points)
            lhs, rhs = value(cj, r), value(base, r / k**2) / k**2
            report["even"][f"{jj},{s:+d}"] = float(np.max(np.abs(lhs - rhs) / lhs))
        if is_odd and jj > 1 and (1, s) in curves:
            base = curves[(1, s)]
            r = np.linspace(0.0, min(cj.r_max, base.r_max * jj * jj), n_points)
            lhs, rhs = value(cj, r), value(base, r / jj**2) / jj**2
            report["odd"][f"{jj},{s:+d}"] = float(np.max(np.abs(lhs - rhs) / lhs))
        if is_odd and s == 1 and (jj, -1) in curves:
            other = curves[(jj, -1)]
            r = np.linspace(0.0, min(cj.r_max, other.r_max), n_points)
            report["sign"][str(jj)] = float(np.max(np.abs(value(cj, r) - value(other, r))))
    report["max_even"] = max(report["even"].values(), default=0.0)
    report["max_odd"] = max(report["odd"].values(), default=0.0)
    report["max_sign"] = max(report["sign"].values(), default=0.0)
    return report
