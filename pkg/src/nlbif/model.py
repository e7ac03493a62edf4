"""Reaction nonlinearities ``f`` and nonlocal diffusion functions ``a``.

Both are immutable records of callables with exact derivatives and
primitives.  Factories cover the supported families; validators check the
structural conditions numerically on a finite sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize, special
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "Nonlinearity",
    "Diffusion",
    "PrimitiveA",
    "ConditionResult",
    "ValidationReport",
    "NonlinearityError",
    "cubic",
    "asymmetric_cubic",
    "polynomial",
    "from_callables",
    "constant_diffusion",
    "bump_diffusion",
    "diffusion_from_knots",
    "validate_nonlinearity",
    "validate_diffusion",
    "build_primitive",
    "build_primitive_a",
]

Func = Callable[[np.ndarray], np.ndarray]

# Gauss-Legendre rule on [0, 1] for primitive differences; exact for
# polynomials of degree <= 47.
_GL_T, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


class NonlinearityError(ValueError):
    """Raised when a nonlinearity cannot be evaluated or fails validation."""


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction term with ``f(0) = 0``, ``f'(0) = 1`` and its primitive.

    ``z_plus``/``z_minus`` are the zeros of ``f`` bracketing the origin; they
    are ``nan`` when ``f`` has no such zero (the validator reports it).
    """

    f: Func
    df: Func
    ddf: Func
    F: Func
    z_plus: float
    z_minus: float
    is_odd: bool
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def F_gap(self, U: float, s: np.ndarray, one_minus: np.ndarray | None = None) -> np.ndarray:
        """``F(U) - F(U*s)`` for ``s`` in [0, 1], without cancellation.

        Integrates ``f`` over ``[U*s, U]`` with a fixed Gauss rule, so values
        stay accurate relative to their own size as ``s -> 1`` provided
        ``one_minus = 1 - s`` is supplied accurately.
        """
        s = np.asarray(s, dtype=float)
        if one_minus is None:
            one_minus = 1.0 - s
        length = U * np.asarray(one_minus, dtype=float)
        v = (U * s)[..., None] + length[..., None] * _GL_T
        return length * (self.f(v) @ _GL_W)

    @property
    def energy_max(self) -> float:
        return float(min(self.F(self.z_plus), self.F(self.z_minus)))


def _odd_part_zero(coef: np.ndarray) -> bool:
    return bool(np.all(coef[0::2] == 0.0))


def _polish(p: Polynomial, dp: Polynomial, x0: float) -> float:
    """Newton refinement of a root; multiple roots keep the eigenvalue estimate."""
    x, info = optimize.newton(p, x0, fprime=dp, tol=1e-15, maxiter=20, full_output=True, disp=False)
    return float(x) if info.converged and math.isfinite(x) else x0


def polynomial(coefficients: Sequence[float]) -> Nonlinearity:
    """``f(u) = sum_k c_k u**k`` with closed-form derivatives and primitive."""
    coef = np.asarray(coefficients, dtype=float)
    if coef.ndim != 1 or coef.size < 2:
        raise NonlinearityError("need at least the constant and linear coefficients")
    p = Polynomial(coef)
    dp, ddp, P = p.deriv(), p.deriv(2), p.integ(lbnd=0.0)
    # subnormal leading terms would overflow the companion matrix
    roots = p.trim(np.finfo(float).tiny).roots()
    roots = roots[np.isfinite(roots)]
    real = np.sort(roots[np.abs(roots.imag) <= 1e-12 * (1 + np.abs(roots.real))].real)
    pos = real[real > 1e-14]
    neg = real[real < -1e-14]
    z_plus = _polish(p, dp, float(pos[0])) if pos.size else math.nan
    z_minus = _polish(p, dp, float(neg[-1])) if neg.size else math.nan
    return Nonlinearity(
        f=p, df=dp, ddf=ddp, F=P,
        z_plus=z_plus, z_minus=z_minus,
        is_odd=_odd_part_zero(coef),
        name="polynomial", params={"coefficients": coef.tolist()},
    )


def cubic(kappa: float = 1.0) -> Nonlinearity:
    """Odd cubic ``f(u) = u - kappa*u**3``."""
    if kappa <= 0:
        raise NonlinearityError("kappa must be positive")
    nl = polynomial([0.0, 1.0, 0.0, -kappa])
    z = 1.0 / math.sqrt(kappa)
    return Nonlinearity(
        f=nl.f, df=nl.df, ddf=nl.ddf, F=nl.F, z_plus=z, z_minus=-z,
        is_odd=True, name="cubic", params={"kappa": kappa},
    )


def asymmetric_cubic(kappa_plus: float = 1.0, kappa_minus: float = 0.25) -> Nonlinearity:
    """C^2 piecewise cubic: ``u - kappa_plus*u**3`` for u >= 0, ``u - kappa_minus*u**3`` below."""
    if kappa_plus <= 0 or kappa_minus <= 0:
        raise NonlinearityError("cubic coefficients must be positive")

    def k(u):
        return np.where(u >= 0, kappa_plus, kappa_minus)

    def f(u):
        u = np.asarray(u, dtype=float)
        return u - k(u) * (u * u * u)

    def df(u):
        u = np.asarray(u, dtype=float)
        return 1.0 - 3.0 * k(u) * (u * u)

    def ddf(u):
        u = np.asarray(u, dtype=float)
        return -6.0 * k(u) * u

    def F(u):
        u = np.asarray(u, dtype=float)
        u2 = u * u
        return 0.5 * u2 - 0.25 * k(u) * (u2 * u2)

    return Nonlinearity(
        f=f, df=df, ddf=ddf, F=F,
        z_plus=1.0 / math.sqrt(kappa_plus), z_minus=-1.0 / math.sqrt(kappa_minus),
        is_odd=kappa_plus == kappa_minus, name="asymmetric_cubic",
        params={"kappa_plus": kappa_plus, "kappa_minus": kappa_minus},
    )


def from_callables(f: Func, df: Func, ddf: Func, *, horizon: float = 10.0,
                   is_odd: bool = False, name: str = "custom") -> Nonlinearity:
    """Wrap user callables; ``F`` by adaptive quadrature, zeros by bracketing."""
    def F(u):
        u = np.asarray(u, dtype=float)
        out = np.array([integrate.quad(f, 0.0, float(x), epsabs=1e-14, epsrel=1e-13)[0]
                        for x in u.ravel()])
        return out.reshape(u.shape) if u.shape else float(out[0])

    zp, zm = _scan_zero(f, 0.0, horizon), _scan_zero(f, 0.0, -horizon)
    return Nonlinearity(f=f, df=df, ddf=ddf, F=F, z_plus=zp, z_minus=zm,
                        is_odd=is_odd, name=name)


def _scan_zero(f: Func, start: float, stop: float, n: int = 4000) -> float:
    """First sign change of ``f`` walking from ``start`` towards ``stop``."""
    u = np.linspace(start, stop, n + 1)[1:]
    vals = np.asarray(f(u), dtype=float)
    ref = np.sign(vals[0])
    hit = np.nonzero(np.sign(vals) != ref)[0]
    if not hit.size:
        return math.nan
    i = hit[0]
    lo, hi = (u[i - 1], u[i]) if i > 0 else (u[0], u[1])
    return float(optimize.brentq(lambda x: float(f(x)), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple[ConditionResult, ...]
    z_plus: float
    z_minus: float

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def raise_if_failed(self) -> None:
        bad = [c.name for c in self.conditions if not c.passed]
        if bad:
            raise NonlinearityError("nonlinearity failed: " + ", ".join(bad))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "z_plus": self.z_plus,
            "z_minus": self.z_minus,
            "conditions": [
                {"name": c.name, "passed": c.passed, "worst": c.worst, "detail": c.detail}
                for c in self.conditions
            ],
        }


def validate_nonlinearity(nl: Nonlinearity, n: int = 10_000, tol: float = 1e-10,
                          default_horizon: float = 10.0) -> ValidationReport:
    """Check the structural conditions on ``f`` over a finite sample.

    The sample covers ``[z_minus - 1, z_plus + 1]``; the dissipativity
    condition is only checked at the ends of that horizon.
    """
    zp = _scan_zero(nl.f, 0.0, max(default_horizon, 2 * abs(nl.z_plus) if math.isfinite(nl.z_plus) else 0.0))
    zm = _scan_zero(nl.f, 0.0, -max(default_horizon, 2 * abs(nl.z_minus) if math.isfinite(nl.z_minus) else 0.0))
    lo = (zm if math.isfinite(zm) else -default_horizon) - 1.0
    hi = (zp if math.isfinite(zp) else default_horizon) + 1.0
    u = np.linspace(lo, hi, n)
    with np.errstate(all="ignore"):
        fv, dfv, ddfv, Fv = (np.asarray(g(u), dtype=float) for g in (nl.f, nl.df, nl.ddf, nl.F))
        if not all(np.all(np.isfinite(v)) for v in (fv, dfv, ddfv, Fv)):
            raise NonlinearityError("nonlinearity is not finite on the sample horizon")
        f0 = float(nl.f(np.array(0.0)))
        df0 = float(nl.df(np.array(0.0)))

    conds = [
        ConditionResult("f(0)=0", abs(f0) <= tol, abs(f0)),
        ConditionResult("f'(0)=1", abs(df0 - 1.0) <= tol, abs(df0 - 1.0)),
    ]
    nz = u != 0.0
    prod = ddfv[nz] * u[nz]
    worst = float(prod.max())
    conds.append(ConditionResult("f''(u)u<0", worst < 0.0, worst,
                                 f"at u={u[nz][np.argmax(prod)]:.6g}"))

    found = math.isfinite(zp) and math.isfinite(zm)
    conds.append(ConditionResult(
        "zeros", found, 0.0 if found else math.inf,
        "" if found else "no sign change of f on one side of the origin"))
    # Horizon-limited stand-in for limsup f(u)/u < 0.
    ratio = max(float(nl.f(np.array(lo))) / lo, float(nl.f(np.array(hi))) / hi)
    conds.append(ConditionResult("dissipative", ratio < 0.0, ratio, "f(u)/u at horizon ends"))

    # F against f on sampled intervals.
    rng = np.random.default_rng(0)
    pts = np.sort(rng.uniform(lo, hi, size=(50, 2)), axis=1)
    err = 0.0
    for a_, b_ in pts:
        ref = integrate.quad(nl.f, a_, b_, epsabs=1e-13, epsrel=1e-12)[0]
        err = max(err, abs(float(nl.F(np.array(b_))) - float(nl.F(np.array(a_))) - ref))
    conds.append(ConditionResult("F'=f", err <= max(tol, 1e-9), err))
    return ValidationReport(tuple(conds), zp, zm)


@dataclass(frozen=True)
class Diffusion:
    """Nonlocal diffusion coefficient ``a(r)`` with bounds ``m <= a <= M``."""

    a: Func
    da: Func
    m: float
    M: float
    r_max: float
    kind: str
    params: dict = field(default_factory=dict, compare=False)
    A_closed: Func | None = field(default=None, compare=False, repr=False)

    def __call__(self, r):
        return self.a(r)


def _bounds(a: Func, r_max: float, extra: Sequence[float] = ()) -> tuple[float, float]:
    r = np.concatenate([np.linspace(0.0, r_max, 10_001), np.asarray(extra, dtype=float)])
    v = np.asarray(a(r), dtype=float)
    return float(v.min()), float(v.max())


def constant_diffusion(value: float = 1.0, r_max: float = 10.0) -> Diffusion:
    if value <= 0:
        raise ValueError("diffusion must be positive")
    return Diffusion(
        a=lambda r: np.full_like(np.asarray(r, dtype=float), value),
        da=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        m=value, M=value, r_max=r_max, kind="constant", params={"value": value},
        A_closed=lambda s: value * np.asarray(s, dtype=float),
    )


def bump_diffusion(alpha: float, beta: float, gamma: float, r0: float,
                   r_max: float = 10.0) -> Diffusion:
    """``a(r) = alpha + beta*exp(-gamma*(r - r0)**2)``; ``beta < 0`` gives a dip."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")

    def a(r):
        r = np.asarray(r, dtype=float)
        return alpha + beta * np.exp(-gamma * (r - r0) ** 2)

    def da(r):
        r = np.asarray(r, dtype=float)
        return -2.0 * gamma * beta * (r - r0) * np.exp(-gamma * (r - r0) ** 2)

    sg = math.sqrt(gamma)

    def A(s):
        s = np.asarray(s, dtype=float)
        return alpha * s + beta * 0.5 * math.sqrt(math.pi / gamma) * (
            special.erf(sg * (s - r0)) + special.erf(sg * r0))

    m, M = _bounds(a, r_max, [min(max(r0, 0.0), r_max)])
    if m <= 0:
        raise ValueError(f"bump diffusion not positive on [0, {r_max}] (min {m:.3g})")
    return Diffusion(a=a, da=da, m=m, M=M, r_max=r_max, kind="bump",
                     params={"alpha": alpha, "beta": beta, "gamma": gamma, "r0": r0},
                     A_closed=A)


def diffusion_from_knots(knots: Sequence[Sequence[float]], r_max: float | None = None) -> Diffusion:
    """C^1 cubic Hermite interpolant through ``(r, a, a')`` knots.

    Constant extension outside the knot range, so the end slopes must vanish
    whenever there is something to extend to.
    """
    kn = np.asarray(knots, dtype=float).reshape(-1, 3)
    if kn.shape[0] == 0:
        raise ValueError("no knots")
    r, av, dav = kn.T
    if np.any(np.diff(r) <= 0):
        raise ValueError("knots must be strictly increasing in r")
    if np.any(av <= 0):
        raise ValueError("knot values of a must be positive")
    r_max = float(r_max if r_max is not None else max(r[-1], 10.0))

    if kn.shape[0] == 1:
        out = constant_diffusion(float(av[0]), r_max)
        return Diffusion(a=out.a, da=out.da, m=out.m, M=out.M, r_max=r_max,
                         kind="knots", params={"knots": kn.tolist()}, A_closed=out.A_closed)
    if dav[-1] != 0.0:
        raise ValueError("last knot slope must be zero for a C^1 constant extension")
    if r[0] > 0 and dav[0] != 0.0:
        raise ValueError("first knot slope must be zero for a C^1 constant extension")

    spl = CubicHermiteSpline(r, av, dav)
    dspl = spl.derivative()
    ispl = spl.antiderivative()
    r_lo, r_hi, a_lo, a_hi = r[0], r[-1], av[0], av[-1]

    def a(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= r_lo, a_lo, np.where(x >= r_hi, a_hi, spl(np.clip(x, r_lo, r_hi))))

    def da(x):
        x = np.asarray(x, dtype=float)
        inside = (x > r_lo) & (x < r_hi)
        return np.where(inside, dspl(np.clip(x, r_lo, r_hi)), 0.0)

    base = float(ispl(r_lo))

    def A(s):
        s = np.asarray(s, dtype=float)
        left = a_lo * np.minimum(s, r_lo)
        mid = ispl(np.clip(s, r_lo, r_hi)) - base
        right = a_hi * np.maximum(s - r_hi, 0.0)
        # knots starting after 0: left part covers [0, r_lo]
        return left + mid + right

    crit = [float(x) for x in dspl.roots(extrapolate=False) if 0.0 <= x <= r_max]
    extra = list(r[(r >= 0) & (r <= r_max)]) + crit
    m, M = _bounds(a, r_max, extra)
    vals = np.asarray(a(np.asarray(extra + [0.0, r_max])), dtype=float)
    m, M = min(m, float(vals.min())), max(M, float(vals.max()))
    if m <= 0:
        raise ValueError(f"interpolant not positive on [0, {r_max}] (min {m:.3g})")
    return Diffusion(a=a, da=da, m=m, M=M, r_max=r_max, kind="knots",
                     params={"knots": kn.tolist()}, A_closed=A)


def validate_diffusion(d: Diffusion, n: int = 10_000, tol: float = 1e-6) -> ValidationReport:
    r = np.linspace(0.0, d.r_max, n)
    av = np.asarray(d.a(r), dtype=float)
    conds = [
        ConditionResult("m>0", d.m > 0, d.m),
        ConditionResult("m<=a<=M", bool(np.all(av >= d.m - 1e-12) and np.all(av <= d.M + 1e-12)),
                        float(max(d.m - av.min(), av.max() - d.M, 0.0))),
    ]
    h = 1e-6 * max(1.0, d.r_max)
    ri = r[(r > h) & (r < d.r_max - h)]
    fd = (np.asarray(d.a(ri + h)) - np.asarray(d.a(ri - h))) / (2 * h)
    err = float(np.max(np.abs(fd - np.asarray(d.da(ri)))))
    conds.append(ConditionResult("a'=da", err <= tol * (1 + d.M), err))
    return ValidationReport(tuple(conds), math.nan, math.nan)


def build_primitive(nl: Nonlinearity) -> Func:
    """Primitive ``F`` of ``f`` with ``F(0) = 0``."""
    return nl.F


@dataclass(frozen=True)
class PrimitiveA:
    """``A(s) = int_0^s a``; closed form when the family has one."""

    diffusion: Diffusion

    def __call__(self, s):
        if self.diffusion.A_closed is not None:
            return self.diffusion.A_closed(s)
        s_arr = np.asarray(s, dtype=float)
        out = np.array([integrate.quad(self.diffusion.a, 0.0, float(x), epsabs=1e-13, epsrel=1e-12)[0]
                        for x in s_arr.ravel()])
        return out.reshape(s_arr.shape) if s_arr.shape else float(out[0])


def build_primitive_a(d: Diffusion) -> PrimitiveA:
    return PrimitiveA(d)
