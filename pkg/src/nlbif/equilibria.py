"""Equilibria of ``u_t = a(||u_x||**2) u_xx + nu f(u)`` and their bifurcations.

A class-``(j, sign)`` local equilibrium with parameter ``lam`` and gradient
energy ``r`` is a nonlocal equilibrium exactly when ``nu*c(r) = a(r)``, i.e.
``lam = nu/a(r)``.  Along a branch ``nu_branch(r) = a(r)*lam(r)``; its
monotonicity decides the Morse index (``j - 1`` where increasing, ``j``
where decreasing) and its interior extrema are saddle-node points.

Roots are located on the interpolated curves and then refined in the energy
variable, where ``lam`` and ``r`` are explicit, so no nested solves occur.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .ccurves import CCurve
from .chafee_infante import EquilibriumCI, reconstruct_profile
from .model import Diffusion, Nonlinearity

__all__ = [
    "BranchPoint",
    "EquilibriumSet",
    "BifurcationEvent",
    "BifurcationDiagram",
    "find_equilibria",
    "classify_point",
    "trivial_index",
    "sweep",
    "equilibrium_profile",
    "ProfileCheck",
    "gap_tolerance",
    "predicted_count",
    "GAP_REL",
]

SCAN_POINTS = 2000
R_ZERO_FRAC = 1e-8        # roots below this fraction of r_max are the trivial state
TANGENCY_SCREEN = 1e-6    # |h|/a on the interpolant that triggers a tangency check
TANGENCY_TOL = 1e-9       # |h|/(1 + a) accepted as an exact touch
MERGE_FRAC = 1e-4


GAP_REL = 1e-6


def gap_tolerance(da_value: float, rel: float = GAP_REL) -> float:
    """Band ``|a' - nu c'| <= rel*(1 + |a'|)`` treated as non-hyperbolic."""
    return rel * (1.0 + abs(da_value))


@dataclass(frozen=True)
class BranchPoint:
    """A nontrivial equilibrium on branch ``(j, sign)``.

    ``morse_index`` is ``None`` when the point is numerically non-hyperbolic.
    """

    j: int
    sign: int
    nu: float
    r: float
    lam: float
    E: float
    hyperbolic: bool
    morse_index: int | None
    criterion_gap: float
    residual: float
    tangency: bool = False
    degenerate: bool = False
    at_horizon: bool = False

    @property
    def c(self) -> float:
        return 1.0 / self.lam

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class EquilibriumSet:
    """All equilibria found at one ``nu``: zero plus the branch points."""

    nu: float
    trivial_index: int
    trivial_hyperbolic: bool
    points: tuple[BranchPoint, ...]
    truncated: tuple[tuple[int, int], ...] = ()
    missing_classes: bool = False

    @property
    def count(self) -> int:
        return 1 + len(self.points)

    def indices(self) -> list[int | None]:
        return [p.morse_index for p in self.points]

    def on_branch(self, j: int, sign: int) -> list[BranchPoint]:
        return [p for p in self.points if p.j == j and p.sign == sign]


def trivial_index(a: Diffusion, nu: float) -> tuple[int, bool]:
    """Morse index of ``u = 0`` (``#{k : k**2 a(0) < nu}``) and its hyperbolicity."""
    ratio = nu / float(a.a(0.0))
    k = int(math.floor(math.sqrt(ratio)))
    while (k + 1) ** 2 <= ratio:
        k += 1
    hyperbolic = abs(ratio - k * k) > 1e-12 * ratio
    if not hyperbolic:
        return k - 1, False
    return k, True


def _scan_grid(curve: CCurve) -> np.ndarray:
    r = np.concatenate([curve.r, np.linspace(0.0, curve.r_max, SCAN_POINTS)])
    mids = 0.5 * (curve.r[1:] + curve.r[:-1])
    return np.unique(np.concatenate([r, mids]))


def _a(a: Diffusion, r) -> float:
    return float(a.a(np.asarray(r, dtype=float)))


def _da(a: Diffusion, r) -> float:
    return float(a.da(np.asarray(r, dtype=float)))


def classify_point(a: Diffusion, curve: CCurve, nu: float, r: float,
                   E: float | None = None, gap_rel: float = GAP_REL
                   ) -> tuple[bool, int | None, float]:
    """``(hyperbolic, morse_index, a'(r) - nu*c'(r))`` from the exact curve."""
    if E is None:
        E = curve.energy_at(r)
    lam, _, dlam = curve.state(E)
    dc = -dlam / lam**2
    da = _da(a, r)
    gap = da - nu * dc
    if abs(gap) <= gap_tolerance(da, gap_rel):
        return False, None, gap
    return True, (curve.j - 1 if gap > 0 else curve.j), gap


def _refine_in_energy(fn, curve: CCurve, r_lo: float, r_hi: float) -> float | None:
    """Root of ``fn(E)`` between the energies of ``r_lo`` and ``r_hi``; ``None`` without a sign change."""
    e_lo = curve.energy_at(r_lo)
    e_hi = curve.energy_at(r_hi)
    g_lo, g_hi = fn(e_lo), fn(e_hi)
    if g_lo == 0.0:
        return e_lo
    if g_hi == 0.0:
        return e_hi
    if g_lo * g_hi > 0:
        return None
    return float(optimize.brentq(fn, e_lo, e_hi, xtol=1e-300, rtol=1e-15, maxiter=200))


def _branch_roots(a: Diffusion, curve: CCurve, nu: float,
                  gap_rel: float = GAP_REL) -> tuple[list[BranchPoint], bool]:
    r = _scan_grid(curve)
    h = np.asarray(a.a(r), dtype=float) - nu * curve(r)
    r_floor = R_ZERO_FRAC * curve.r_max
    found: list[tuple[float, float, bool]] = []   # (E, r, tangency)

    def lam_r(E):
        if E == 0.0:
            return float(curve.j**2), 0.0
        lam, rr = curve._param()(E)
        return lam, rr

    def g(E):
        lam, rr = lam_r(E)
        return _a(a, rr) * lam - nu

    def gap_fn(E):
        lam, rr, dlam = curve.state(E)
        return _da(a, rr) * lam + _a(a, rr) * dlam

    # Touching points: local extrema of h close to zero.
    dh = np.diff(h)
    ext = np.nonzero(dh[:-1] * dh[1:] < 0)[0] + 1
    for k in ext:
        if abs(h[k]) > TANGENCY_SCREEN * (1.0 + abs(a.a(r[k]))) or r[k] <= r_floor:
            continue
        E = _refine_in_energy(gap_fn, curve, r[k - 1], r[k + 1])
        if E is None:
            continue
        lam, rr = lam_r(E)
        if abs(g(E) / lam) <= TANGENCY_TOL * (1.0 + _a(a, rr)):
            found.append((E, rr, True))

    # Transversal crossings.
    sgn = np.sign(h)
    cells = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    exact_zero = np.nonzero(sgn == 0)[0]
    for k in cells:
        if r[k + 1] <= r_floor:
            continue
        if any(r[k] - MERGE_FRAC * (1 + t[1]) <= t[1] <= r[k + 1] + MERGE_FRAC * (1 + t[1])
               for t in found if t[2]):
            continue
        E = _refine_in_energy(g, curve, max(r[k], r_floor), r[k + 1])
        if E is None:
            continue  # interpolant noise across a touching point
        found.append((E, lam_r(E)[1], False))
    for k in exact_zero:
        if r[k] > r_floor and not any(abs(t[1] - r[k]) <= MERGE_FRAC * (1 + r[k]) for t in found):
            E = curve.energy_at(r[k])
            found.append((E, r[k], False))

    truncated = bool(h[-1] < 0)
    points = []
    for E, rr, tangency in sorted(found, key=lambda t: t[1]):
        lam, _ = lam_r(E)
        hyper, idx, gap = classify_point(a, curve, nu, rr, E, gap_rel)
        degenerate = False
        if not hyper:
            degenerate = bool(_is_degenerate(a, curve, nu, rr))
        at_h = abs(rr - curve.r_max) <= MERGE_FRAC * (1 + curve.r_max)
        truncated = truncated or at_h
        points.append(BranchPoint(
            j=curve.j, sign=curve.sign, nu=nu, r=rr, lam=lam, E=E,
            hyperbolic=hyper, morse_index=idx, criterion_gap=gap,
            residual=nu / lam - _a(a, rr), tangency=tangency or not hyper,
            degenerate=degenerate, at_horizon=at_h))
    return points, truncated


def _is_degenerate(a: Diffusion, curve: CCurve, nu: float, r: float) -> bool:
    """Second-order contact: ``nu_branch''`` vanishes along with ``nu_branch'``."""
    d = 1e-4 * max(r, 1e-3)
    lo, hi = max(r - d, 0.0), min(r + d, curve.r_max)
    gl = _da(a, lo) - nu * curve.derivative(lo)
    gh = _da(a, hi) - nu * curve.derivative(hi)
    second = (gh - gl) / (hi - lo)
    scale = abs(_da(a, r)) + nu * abs(curve.derivative(r)) + 1e-300
    return abs(second) * (hi - lo) <= 1e-6 * scale


def find_equilibria(a: Diffusion, curves: dict[tuple[int, int], CCurve] | list[CCurve],
                    nu: float, *, gap_rel: float = GAP_REL) -> EquilibriumSet:
    """All equilibria at parameter ``nu`` within the curves' ``r`` ranges.

    Branches whose ``nu*c - a`` is still positive at ``r_max`` must cross
    again beyond it and are listed in ``truncated``.  ``missing_classes`` is
    set when a class above the largest supplied ``j`` could still exist.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    cs = list(curves.values()) if isinstance(curves, dict) else list(curves)
    points: list[BranchPoint] = []
    truncated = []
    for curve in sorted(cs, key=lambda c: (c.j, -c.sign)):
        pts, trunc = _branch_roots(a, curve, nu, gap_rel)
        points.extend(pts)
        if trunc:
            truncated.append((curve.j, curve.sign))
    k0, hyp0 = trivial_index(a, nu)
    j_top = max(c.j for c in cs)
    missing = nu / (j_top + 1) ** 2 >= a.m
    return EquilibriumSet(nu=nu, trivial_index=k0, trivial_hyperbolic=hyp0,
                          points=tuple(points), truncated=tuple(truncated),
                          missing_classes=bool(missing))


# --------------------------------------------------------------------------- sweep


@dataclass(frozen=True)
class BifurcationEvent:
    """Pitchfork from zero, saddle-node, or a branch crossing the ``r`` horizon.

    ``delta`` is the change of the equilibrium count as ``nu`` increases
    through ``nu_crit``.  Pitchforks carry ``sign = 0`` since both signs
    leave zero at the same ``nu``.
    """

    kind: str
    nu_crit: float
    r_crit: float
    j: int
    sign: int
    direction: str
    delta: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class BifurcationDiagram:
    nu_grid: np.ndarray
    branches: dict[tuple[int, int], np.ndarray] = field(repr=False)
    events: tuple[BifurcationEvent, ...]
    counts_direct: np.ndarray
    counts_predicted: np.ndarray
    unresolved: tuple[tuple[int, int, float], ...] = ()
    incomplete: tuple[float, ...] = ()   # grid values where a higher class could exist

    @property
    def consistent(self) -> bool:
        return bool(np.array_equal(self.counts_direct, self.counts_predicted))

    def mismatches(self) -> list[float]:
        bad = self.counts_direct != self.counts_predicted
        return [float(v) for v in self.nu_grid[bad]]

    def events_of(self, kind: str, j: int | None = None) -> list[BifurcationEvent]:
        return [e for e in self.events if e.kind == kind and (j is None or e.j == j)]

    def count_at(self, nu: float) -> int:
        return predicted_count(self.events, nu)

    def step_function(self) -> list[tuple[float, int]]:
        """``(nu_start, count)`` pieces; the first starts at 0."""
        out = [(0.0, 1)]
        for e in sorted(self.events, key=lambda e: e.nu_crit):
            if e.delta:
                out.append((e.nu_crit, out[-1][1] + e.delta))
        return out


def predicted_count(events, nu: float) -> int:
    return 1 + sum(e.delta for e in events if e.nu_crit < nu)


def _branch_table(a: Diffusion, curve: CCurve) -> np.ndarray:
    """Columns ``r, nu_branch, dnu_branch/dr, morse index`` on the scan grid."""
    r = _scan_grid(curve)
    lam = curve.lam_at(r)
    dlam = curve._spline(r, 1)
    av = np.asarray(a.a(r), dtype=float)
    nb = av * lam
    dnb = np.asarray(a.da(r), dtype=float) * lam + av * dlam
    idx = np.where(dnb > 0, curve.j - 1, curve.j).astype(float)
    return np.column_stack([r, nb, dnb, idx])


def _branch_events(a: Diffusion, curve: CCurve) -> tuple[list[BifurcationEvent], list]:
    tab = _branch_table(a, curve)
    r, nb, dnb = tab[:, 0], tab[:, 1], tab[:, 2]
    events: list[BifurcationEvent] = []
    unresolved = []

    def dn(E):
        lam, rr, dlam = curve.state(E)
        return _da(a, rr) * lam + _a(a, rr) * dlam

    def add_saddle(E):
        lam, rr, _ = curve.state(E)
        d_lo = dn(curve.energy_at(max(rr * (1 - 1e-6), 0.0)))
        d_hi = dn(curve.energy_at(min(rr * (1 + 1e-6), curve.r_max)))
        is_min = d_lo < 0 < d_hi
        events.append(BifurcationEvent(
            kind="saddle-node", nu_crit=_a(a, rr) * lam, r_crit=rr, j=curve.j, sign=curve.sign,
            direction="supercritical" if is_min else "subcritical", delta=2 if is_min else -2))

    def scan(rg, dg):
        s = np.sign(dg)
        for k in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            if rg[k + 1] <= R_ZERO_FRAC * curve.r_max:
                continue
            E = _refine_in_energy(dn, curve, rg[k], rg[k + 1])
            if E is not None:
                add_saddle(E)
        return s

    scan(r, dnb)
    # Near-double critical points: |dnb| has a small local minimum without a
    # sign change.  Refine the cell once, then give up and report it.
    ad = np.abs(dnb)
    for k in np.nonzero((ad[1:-1] < ad[:-2]) & (ad[1:-1] < ad[2:]))[0] + 1:
        scale = np.max(np.abs(dnb[max(k - 5, 0):k + 6]))
        if ad[k] > 1e-3 * scale or np.sign(dnb[k - 1]) != np.sign(dnb[k + 1]):
            continue
        if np.sign(dnb[k]) != np.sign(dnb[k - 1]):
            continue
        rf = np.linspace(r[k - 1], r[k + 1], 65)
        lam = curve.lam_at(rf)
        df = np.asarray(a.da(rf), dtype=float) * lam + np.asarray(a.a(rf), dtype=float) * curve._spline(rf, 1)
        if np.any(np.sign(df[:-1]) * np.sign(df[1:]) < 0):
            scan(rf, df)
        elif np.min(np.abs(df)) <= 1e-8 * scale:
            unresolved.append((curve.j, curve.sign, float(r[k])))

    # Leaving zero: both signs share nu = j^2 a(0); combined later.
    d0 = dnb[0]
    events.append(BifurcationEvent(
        kind="pitchfork-branch", nu_crit=float(nb[0]), r_crit=0.0, j=curve.j, sign=curve.sign,
        direction="supercritical" if d0 > 0 else "subcritical", delta=1 if d0 > 0 else -1))
    # The branch crossing r_max behaves like a birth/death for the count.
    events.append(BifurcationEvent(
        kind="horizon", nu_crit=float(nb[-1]), r_crit=float(r[-1]), j=curve.j, sign=curve.sign,
        direction="exit" if dnb[-1] > 0 else "entry", delta=-1 if dnb[-1] > 0 else 1))
    return events, unresolved


def _merge_pitchforks(events: list[BifurcationEvent], a0: float) -> list[BifurcationEvent]:
    out = [e for e in events if e.kind != "pitchfork-branch"]
    by_j: dict[int, list[BifurcationEvent]] = {}
    for e in events:
        if e.kind == "pitchfork-branch":
            by_j.setdefault(e.j, []).append(e)
    for j, evs in by_j.items():
        dirs = {e.direction for e in evs}
        direction = dirs.pop() if len(dirs) == 1 else "mixed"
        out.append(BifurcationEvent(kind="pitchfork", nu_crit=j * j * a0, r_crit=0.0, j=j,
                                    sign=0, direction=direction, delta=sum(e.delta for e in evs)))
    return out


def sweep(a: Diffusion, curves: dict[tuple[int, int], CCurve], nu_grid, *,
          jobs: int = 1, verify: bool = True, gap_rel: float = GAP_REL) -> BifurcationDiagram:
    """Branches, events, and the equilibrium-count step function over ``nu_grid``.

    The predicted count (1 plus the signed event deltas below ``nu``) is
    compared with a direct ``find_equilibria`` call at every grid value.
    Grid values where a class above the supplied ones could still exist are
    listed in ``incomplete``; counts there are lower bounds.
    """
    nu_grid = np.asarray(nu_grid, dtype=float)
    if nu_grid.ndim != 1 or nu_grid.size == 0 or np.any(nu_grid <= 0) or np.any(np.diff(nu_grid) <= 0):
        raise ValueError("nu_grid must be positive and strictly increasing")
    keys = sorted(curves, key=lambda k: (k[0], -k[1]))
    events: list[BifurcationEvent] = []
    unresolved: list = []
    branches = {}
    for key in keys:
        ev, un = _branch_events(a, curves[key])
        events.extend(ev)
        unresolved.extend(un)
        branches[key] = _branch_table(a, curves[key])
    events = _merge_pitchforks(events, float(a.a(0.0)))
    events.sort(key=lambda e: (e.nu_crit, e.j, -e.sign, e.kind))

    predicted = np.array([predicted_count(events, nu) for nu in nu_grid])
    j_top = max(k[0] for k in keys)
    incomplete = tuple(float(nu) for nu in nu_grid if nu / (j_top + 1) ** 2 >= a.m)
    if verify:
        def direct(nu):
            return find_equilibria(a, curves, float(nu), gap_rel=gap_rel).count
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                counts = np.array(list(ex.map(direct, nu_grid)))
        else:
            counts = np.array([direct(nu) for nu in nu_grid])
    else:
        counts = predicted.copy()
    return BifurcationDiagram(nu_grid=nu_grid, branches=branches, events=tuple(events),
                              counts_direct=counts, counts_predicted=predicted,
                              unresolved=tuple(unresolved), incomplete=incomplete)


# --------------------------------------------------------------------------- profiles


@dataclass(frozen=True)
class ProfileCheck:
    profile: EquilibriumCI
    r_rel_error: float
    residual: float


def equilibrium_profile(point: BranchPoint, nl: Nonlinearity, a: Diffusion,
                        n: int = 4096) -> ProfileCheck:
    """Sampled equilibrium ``psi`` with its gradient-energy and residual checks.

    The residual is ``a(r) psi_xx + nu f(psi)`` with a three-point second
    difference on the interior grid.
    """
    prof = reconstruct_profile(nl, point.lam, point.j, point.sign, E=point.E, n=n)
    r_err = abs(prof.r_grid - point.r) / point.r
    h = prof.x[1] - prof.x[0]
    psi = prof.phi
    psi_xx = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / (h * h)
    res = _a(a, point.r) * psi_xx + point.nu * nl.f(psi[1:-1])
    return ProfileCheck(profile=prof, r_rel_error=float(r_err), residual=float(np.max(np.abs(res))))
