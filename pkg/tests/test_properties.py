from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nlbif import assemble, constant_diffusion, cubic, diffusion_from_knots, lam_and_r, polynomial
from nlbif import composite_time
from nlbif.export import dumps_json

SETTINGS = settings(max_examples=30, deadline=None)


@SETTINGS
@given(kappa=st.floats(0.1, 10.0), u=st.floats(-3.0, 3.0))
def test_primitive_derivative_is_f(kappa, u):
    nl = cubic(kappa)
    h = 1e-5
    fd = (float(nl.F(u + h)) - float(nl.F(u - h))) / (2 * h)
    assert abs(fd - float(nl.f(u))) <= 1e-6 * (1 + abs(float(nl.f(u))) + kappa * u * u)


@SETTINGS
@given(E=st.floats(1e-6, 0.2499), j=st.integers(1, 4), sign=st.sampled_from([1, -1]))
def test_parametrization_closes_the_interval(nl_asym, E, j, sign):
    lam, r = lam_and_r(nl_asym, E, j, sign)
    assert lam > j * j and r > 0
    assert math.isclose(composite_time(nl_asym, E, lam, j, sign), math.pi, rel_tol=1e-11)


@SETTINGS
@given(x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0), key=st.sampled_from([(1, 1), (2, -1), (3, 1)]))
def test_ccurve_strictly_decreasing(curves_asym, x, y, key):
    c = curves_asym[key]
    r1, r2 = sorted((x * c.r_max, y * c.r_max))
    if r2 - r1 > 1e-6 * c.r_max:
        assert float(c(r1)) > float(c(r2))
    assert 0 < float(c(r2)) <= 1 / key[0] ** 2 + 1e-12


@SETTINGS
@given(eps=st.floats(0.01, 50.0), amp=st.floats(0.05, 0.9))
def test_rank_one_interlacing(eps, amp):
    n = 60
    psi = amp * np.sin(np.linspace(0, math.pi, n + 2))
    op = assemble(psi, 4.0, constant_diffusion(1.0), cubic(), 1.0, mode="local")
    base = op.top_eigenvalues(5)
    up = op.with_eps(eps).top_eigenvalues(5)
    dense = np.sort(np.linalg.eigvalsh(op.with_eps(eps).matrix()))[::-1][:5]
    tol = 1e-9 * (1 + np.abs(dense))
    assert np.all(np.abs(up - dense) <= tol)
    # positive rank-one update: mu_i(0) <= mu_i(eps) <= mu_{i-1}(0)
    assert np.all(up >= base - tol)
    assert np.all(up[1:] <= base[:-1] + tol[1:])


@SETTINGS
@given(vals=st.lists(st.floats(0.2, 5.0), min_size=2, max_size=6),
       slopes=st.lists(st.floats(-1.0, 1.0), min_size=6, max_size=6))
def test_knot_interpolant_is_c1(vals, slopes):
    r = np.arange(len(vals), dtype=float) * 1.5
    d = list(slopes[: len(vals)])
    d[0] = d[-1] = 0.0
    try:
        a = diffusion_from_knots(list(zip(r, vals, d)))
    except ValueError:
        return  # interpolant dipped to nonpositive values
    for x in r[1:-1]:
        h = 1e-8
        assert abs(float(a.a(x + h)) - float(a.a(x - h))) <= 1e-6
        assert abs(float(a.da(x + h)) - float(a.da(x - h))) <= 1e-5
    grid = np.linspace(0, a.r_max, 2001)
    v = np.asarray(a.a(grid))
    assert a.m <= v.min() + 1e-12 and v.max() <= a.M + 1e-12


@SETTINGS
@given(coef=st.lists(st.floats(-3, 3), min_size=1, max_size=4))
def test_polynomial_oddness_flag(coef):
    c = [0.0, 1.0] + coef
    nl = polynomial(c)
    odd = all(v == 0.0 for v in c[0::2])
    assert nl.is_odd == odd
    if odd:
        u = np.linspace(-1, 1, 9)
        assert np.allclose(nl.f(-u), -nl.f(u), rtol=1e-14, atol=0.0)


@SETTINGS
@given(st.recursive(st.none() | st.booleans() | st.integers(-10, 10) | st.floats(allow_nan=True),
                    lambda ch: st.lists(ch, max_size=3) | st.dictionaries(st.text(max_size=3), ch, max_size=3),
                    max_leaves=8))
def test_json_export_never_emits_nan(obj):
    import json
    text = dumps_json(obj)
    json.loads(text)   # strict JSON: no NaN/Infinity tokens
    assert "NaN" not in text and "Infinity" not in text
