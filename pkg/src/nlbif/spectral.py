"""Finite-difference spectra of the linearizations at an equilibrium ``psi``.

All operators share the form

    L_eps v = v'' + p(x) v + eps * q(x) * int_0^pi q(s) v(s) ds,

with ``p = nu f'(psi)/a(r)`` and ``q = f(psi)``.  ``eps = 0`` is the local
Sturm-Liouville operator; ``eps0 = -2 nu**2 a'(r)/a(r)**3`` gives the
linearization of the nonlocal problem in its semilinear time scale.

The Dirichlet second difference plus potential is tridiagonal, ``T``; the
integral term is the symmetric rank one ``eps * w w^T`` with ``w = sqrt(h) q``.
``T`` is diagonalized once and every ``eps`` is then a secular-equation
solve, which keeps sweeps in ``eps`` cheap and exactly monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .ccurves import CCurve
from .chafee_infante import reconstruct_profile
from .equilibria import BranchPoint
from .model import Diffusion, Nonlinearity

__all__ = [
    "DiscretizedOperator",
    "SpectralReport",
    "EpsilonSweep",
    "assemble",
    "positive_count",
    "epsilon_sweep",
    "epsilon_tilde",
    "epsilon_zero",
    "operator_at",
    "refine_n",
    "spectral_report",
    "eps_tilde_for",
    "DEFAULT_N",
    "SPECTRAL_REL",
]

DEFAULT_N = 2001
DEFLATE = 1e-9
SPECTRAL_REL = 1e-4
MODES = ("local", "nonlocal", "linearized")


def refine_n(n: int) -> int:
    """Interior size with exactly half the spacing: ``h = pi/(n+1)``."""
    return 2 * n + 1


class _Decomposition:
    """Eigenpairs of the tridiagonal part and the rank-one vector in that basis."""

    def __init__(self, diag: np.ndarray, off: float, w: np.ndarray):
        d, V = linalg.eigh_tridiagonal(diag, np.full(diag.size - 1, off))
        order = np.argsort(d)[::-1]
        self.d = d[order]
        self.z = (V[:, order].T @ w)
        zn = float(np.linalg.norm(self.z))
        self.active = np.abs(self.z) > DEFLATE * zn if zn > 0 else np.zeros(self.d.size, bool)

    def eigenvalues(self, eps: float, k: int) -> np.ndarray:
        """Largest ``k`` eigenvalues of ``diag(d) + eps z z^T``, decreasing."""
        d, z, act = self.d, self.z, self.active
        if eps == 0.0 or not act.any():
            return d[:k].copy()
        D, Z2 = d[act], z[act] ** 2
        out = list(d[~act][:k])        # deflated: untouched by the rank-one term
        m = min(k, D.size)
        roots = np.empty(m)
        s = eps * float(Z2.sum())
        for i in range(m):
            if eps > 0:
                base = D[i]
                width = (D[i - 1] - D[i]) if i > 0 else s
            else:
                base = D[i + 1] if i + 1 < D.size else D[i] + s
                width = D[i] - base
            roots[i] = base + _secular_root(D - base, Z2, eps, width)
        out.extend(roots)
        return np.sort(np.array(out))[::-1][:k]

    def zero_eps(self) -> float:
        """``eps`` at which 0 becomes an eigenvalue: ``-1/(z^T diag(d)^-1 z)``."""
        return -1.0 / float(np.sum(self.z[self.active] ** 2 / self.d[self.active]))


def _secular_root(shift: np.ndarray, Z2: np.ndarray, eps: float, width: float) -> float:
    """Root ``t`` in ``(0, width)`` of ``1 + eps*sum(Z2/(shift - t))``, monotone in ``t``."""
    def g(t):
        return 1.0 + eps * float(np.sum(Z2 / (shift - t)))

    tiny = 1e-15 * max(abs(width), 1.0) if width > 0 else 0.0
    lo, hi = tiny, width - tiny
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        return lo if abs(glo) < abs(ghi) else hi
    return float(optimize.brentq(g, lo, hi, xtol=1e-15 * max(1.0, abs(width)), rtol=1e-15))


@dataclass(frozen=True)
class DiscretizedOperator:
    """Symmetric matrix ``T + eps * w w^T`` on ``n`` interior points."""

    n: int
    h: float
    p: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    eps: float
    mode: str
    meta: dict = field(default_factory=dict, compare=False)
    _dec: list = field(default_factory=list, repr=False, compare=False)

    @property
    def diag(self) -> np.ndarray:
        return -2.0 / self.h**2 + self.p

    @property
    def off(self) -> float:
        return 1.0 / self.h**2

    def matrix(self) -> np.ndarray:
        """Dense matrix; exactly symmetric by construction."""
        M = np.diag(self.diag) + np.diag(np.full(self.n - 1, self.off), 1) \
            + np.diag(np.full(self.n - 1, self.off), -1)
        if self.eps:
            M += self.eps * np.outer(self.w, self.w)
        return M

    @property
    def decomposition(self) -> _Decomposition:
        if not self._dec:
            self._dec.append(_Decomposition(self.diag, self.off, self.w))
        return self._dec[0]

    def with_eps(self, eps: float, mode: str = "nonlocal") -> "DiscretizedOperator":
        """Same grid and potential, new rank-one weight; shares the decomposition."""
        return DiscretizedOperator(n=self.n, h=self.h, p=self.p, w=self.w, eps=float(eps),
                                   mode=mode, meta=self.meta, _dec=self._dec)

    def top_eigenvalues(self, k: int) -> np.ndarray:
        return self.decomposition.eigenvalues(self.eps, k)

    def spectral_tol(self, rel: float = SPECTRAL_REL) -> float:
        return rel * (1.0 + float(np.max(np.abs(self.p))))


def epsilon_zero(nu: float, a_val: float, da_val: float) -> float:
    """Rank-one weight of the nonlocal linearization, ``-2 nu^2 a'/a^3``."""
    return -2.0 * nu * nu * da_val / a_val**3


def epsilon_tilde(nu: float, a_val: float, dc_val: float) -> float:
    """Weight at which the crossing eigenvalue vanishes, ``-2 nu^3 c'/a^3``."""
    return -2.0 * nu**3 * dc_val / a_val**3


def assemble(psi: np.ndarray, nu: float, a: Diffusion, nl: Nonlinearity, r: float,
             mode: str = "linearized", eps: float | None = None,
             n: int | None = None) -> DiscretizedOperator:
    """Discretize a linearization around the sampled equilibrium ``psi``.

    Args:
        psi: values on ``n + 2`` uniform points of ``[0, pi]`` (endpoints
            included) or on the ``n`` interior points.
        r: gradient energy ``||psi_x||**2``, used in ``a(r)`` and ``a'(r)``.
        mode: ``local`` (``eps = 0``), ``nonlocal`` (explicit ``eps``) or
            ``linearized`` (``eps = eps0``).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    psi = np.asarray(psi, dtype=float)
    if n is None:
        n = psi.size - 2
    if psi.size == n + 2:
        psi = psi[1:-1]
    elif psi.size != n:
        raise ValueError(f"profile has {psi.size} values; expected {n} or {n + 2} for n={n}")
    if n < 3:
        raise ValueError("need at least 3 interior points")
    h = math.pi / (n + 1)
    a_val = float(a.a(np.asarray(r)))
    da_val = float(a.da(np.asarray(r)))
    p = nu * np.asarray(nl.df(psi), dtype=float) / a_val
    w = math.sqrt(h) * np.asarray(nl.f(psi), dtype=float)
    if mode == "local":
        e = 0.0
    elif mode == "linearized":
        e = epsilon_zero(nu, a_val, da_val)
    else:
        if eps is None:
            raise ValueError("mode 'nonlocal' needs eps")
        e = float(eps)
    meta = {"nu": nu, "r": r, "a": a_val, "da": da_val, "eps0": epsilon_zero(nu, a_val, da_val)}
    return DiscretizedOperator(n=n, h=h, p=p, w=w, eps=e, mode=mode, meta=meta)


@dataclass(frozen=True)
class SpectralReport:
    """Top of the spectrum (decreasing) and the positive count."""

    n: int
    mode: str
    eps: float
    eigenvalues: np.ndarray
    positive: int
    min_abs: float
    tol: float
    refinement: tuple = ()

    @property
    def indeterminate(self) -> bool:
        return self.min_abs < self.tol

    def to_dict(self) -> dict:
        return {
            "n": self.n, "mode": self.mode, "eps": self.eps,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "positive": self.positive, "min_abs": self.min_abs, "tol": self.tol,
            "indeterminate": self.indeterminate,
            "refinement": [{"n": n, "eigenvalues": [float(v) for v in ev]} for n, ev in self.refinement],
        }


def positive_count(op: DiscretizedOperator, extra: int = 3,
                   tol_rel: float = SPECTRAL_REL) -> SpectralReport:
    """Positive eigenvalues and the eigenvalue closest to zero.

    Only the top of the spectrum is resolved: every eigenvalue above the
    ``(#positive + extra)``-th one, which brackets the one nearest zero.
    """
    dec = op.decomposition
    k = int(np.count_nonzero(dec.d > 0)) + extra
    while True:
        ev = dec.eigenvalues(op.eps, min(k, op.n))
        if ev[-1] < 0 or k >= op.n:
            break
        k *= 2
    pos = int(np.count_nonzero(ev > 0))
    return SpectralReport(n=op.n, mode=op.mode, eps=op.eps, eigenvalues=ev, positive=pos,
                          min_abs=float(np.min(np.abs(ev))), tol=op.spectral_tol(tol_rel))


def operator_at(point: BranchPoint, nl: Nonlinearity, a: Diffusion, n: int = DEFAULT_N,
                mode: str = "linearized", eps: float | None = None) -> DiscretizedOperator:
    """Operator around a branch point; the profile is sampled on the operator grid."""
    prof = reconstruct_profile(nl, point.lam, point.j, point.sign, E=point.E, n=n + 1)
    return assemble(prof.phi, point.nu, a, nl, point.r, mode=mode, eps=eps, n=n)


def spectral_report(point: BranchPoint, nl: Nonlinearity, a: Diffusion, n: int = DEFAULT_N,
                    mode: str = "linearized", refine: bool = False,
                    tol_rel: float = SPECTRAL_REL) -> SpectralReport:
    """Positive count at ``n``; with ``refine`` also the top eigenvalues at ``2n + 1``."""
    rep = positive_count(operator_at(point, nl, a, n, mode), tol_rel=tol_rel)
    if not refine:
        return rep
    n2 = refine_n(n)
    rep2 = positive_count(operator_at(point, nl, a, n2, mode), tol_rel=tol_rel)
    k = min(rep.eigenvalues.size, rep2.eigenvalues.size)
    trace = ((n, rep.eigenvalues[:k]), (n2, rep2.eigenvalues[:k]))
    return SpectralReport(n=rep.n, mode=rep.mode, eps=rep.eps, eigenvalues=rep.eigenvalues,
                          positive=rep.positive, min_abs=rep.min_abs, tol=rep.tol,
                          refinement=trace)


@dataclass(frozen=True)
class EpsilonSweep:
    """Top-``k`` eigenvalue branches over an increasing ``eps`` grid."""

    eps: np.ndarray
    mu: np.ndarray = field(repr=False)   # shape (len(eps), k), each row decreasing
    eps_tilde: float
    eps0: float
    eps_zero_discrete: float
    crossing_branch: int                 # 1-based index of the branch through zero
    mu_at_tilde: float
    max_decrease: float                  # worst drop along any branch; <= 0 means monotone

    def monotone(self, tol: float = 1e-8) -> bool:
        return self.max_decrease <= tol

    def table(self) -> np.ndarray:
        return np.column_stack([self.eps, self.mu])


def epsilon_sweep(op: DiscretizedOperator, eps_grid, *, j: int, eps_tilde: float,
                  k: int | None = None) -> EpsilonSweep:
    """Eigenvalue branches ``mu_i(eps)`` and the crossing of branch ``j``.

    Branches are matched by order (``mu_1 > mu_2 > ...``), which is exact for
    simple eigenvalues since they stay ordered as ``eps`` varies.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps_grid) <= 0):
        raise ValueError("eps grid must be increasing")
    k = k or j + 2
    dec = op.decomposition
    mu = np.array([dec.eigenvalues(float(e), k) for e in eps_grid])
    drops = mu[:-1] - mu[1:]
    max_dec = float(np.max(drops)) if drops.size else 0.0
    at = dec.eigenvalues(float(eps_tilde), k)
    return EpsilonSweep(eps=eps_grid, mu=mu, eps_tilde=float(eps_tilde),
                        eps0=float(op.meta.get("eps0", math.nan)),
                        eps_zero_discrete=dec.zero_eps(), crossing_branch=j,
                        mu_at_tilde=float(at[j - 1]), max_decrease=max_dec)


def eps_tilde_for(point: BranchPoint, curve: CCurve, a: Diffusion) -> float:
    """``eps_tilde`` from the exact curve derivative at the point."""
    lam, _, dlam = curve.state(point.E)
    dc = -dlam / lam**2
    return epsilon_tilde(point.nu, float(a.a(np.asarray(point.r))), dc)
