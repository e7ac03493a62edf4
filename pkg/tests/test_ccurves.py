from __future__ import annotations

import math

import numpy as np
import pytest

from nlbif import HorizonError, build_ccurve, ccurve_derivative, check_scaling_identities, gradient_energy

CUBIC_REACH_1 = 3.8142718086157292


def test_anchor_and_slope_at_zero(curves_cubic):
    for (j, s), c in curves_cubic.items():
        assert abs(float(c(0.0)) - 1 / j**2) <= 1e-12
        # small-amplitude expansion: c_1'(0) = -3/(2 pi), c_j'(0) = c_1'(0)/j^4
        assert c.slope_at_zero == pytest.approx(-3 / (2 * math.pi) / j**4, rel=1e-5)


def test_reach_per_class(curves_cubic, curves_asym):
    for (j, _), c in curves_cubic.items():
        assert c.r_max == pytest.approx(j * j * CUBIC_REACH_1, rel=1e-9)
    # negative humps of the asymmetric f reach energy 1, four times the positive side
    assert curves_asym[(1, -1)].r_max == pytest.approx(4 * CUBIC_REACH_1, rel=1e-9)


def test_unreachable_horizon_raises(nl_cubic):
    with pytest.raises(HorizonError) as info:
        build_ccurve(nl_cubic, 1, 1, r_max=6.0)
    assert info.value.achievable[1] == pytest.approx(CUBIC_REACH_1, rel=1e-9)
    assert build_ccurve(nl_cubic, 1, 1, r_max=6.0, clip=True).r_max == pytest.approx(CUBIC_REACH_1)


def test_frozen_values(curves_cubic, curves_asym):
    c = curves_cubic[(1, 1)]
    assert float(c(2.0)) == pytest.approx(0.21808034475294263, rel=1e-8)
    val, der = c.exact(2.0)
    assert val == pytest.approx(0.21808034475294263, rel=1e-12)
    assert der == pytest.approx(-0.20159646680157384, rel=1e-8)
    assert float(ccurve_derivative(c, 2.0)) == pytest.approx(der, rel=1e-6)
    assert curves_asym[(1, -1)].exact(5.0)[0] == pytest.approx(0.4403571703519063, rel=1e-11)


def test_interpolant_against_exact(curves_asym):
    rng = np.random.default_rng(3)
    for c in curves_asym.values():
        for r in rng.uniform(0.0, c.r_max, 6):
            val, der = c.exact(float(r))
            assert abs(float(c(r)) - val) <= 1e-7 * val
            assert abs(float(c.derivative(r)) - der) <= 1e-4 * (abs(der) + 1e-3)


def test_holdout_and_monotone(curves_cubic, curves_asym):
    for c in list(curves_cubic.values()) + list(curves_asym.values()):
        assert c.holdout_error <= 1e-7
        assert c.monotone
        assert np.all(c.dc[1:] < 0)
        assert np.all(np.diff(c.r) > 0) and np.all(np.diff(c.E) > 0)


def test_roundtrip_against_gradient_energy(nl_asym, curves_asym):
    for (j, s), c in curves_asym.items():
        for i in np.linspace(1, c.r.size - 2, 5).astype(int):
            r = gradient_energy(nl_asym, float(c.lam[i]), j, s)
            assert abs(r - c.r[i]) <= 1e-8 * max(1.0, c.r[i])


def test_energy_at_inverts_state(curves_cubic):
    c = curves_cubic[(2, 1)]
    for r in (1e-9, 0.3, 7.0, c.r_max):
        lam, rr, _ = c.state(c.energy_at(r))
        assert rr == pytest.approx(r, rel=1e-10)
        assert 1 / lam == pytest.approx(float(c(r)), rel=1e-7)


def test_outside_range_rejected(curves_cubic):
    c = curves_cubic[(1, 1)]
    with pytest.raises(ValueError):
        c(-0.1)
    with pytest.raises(ValueError):
        c(c.r_max * 1.01)


def test_second_derivative_consistent(curves_cubic):
    c = curves_cubic[(1, 1)]
    h = 1e-4
    fd = (float(c.derivative(2.0 + h)) - float(c.derivative(2.0 - h))) / (2 * h)
    assert float(c.second_derivative(2.0)) == pytest.approx(fd, rel=1e-3)


def test_table_columns(curves_cubic):
    c = curves_cubic[(1, 1)]
    t = c.table()
    assert t.shape == (c.r.size, 5)
    assert np.allclose(t[:, 2], 1 / t[:, 1])


def test_scaling_identities(curves_cubic, curves_asym):
    rep = check_scaling_identities(curves_cubic)
    assert rep["max_odd"] <= 1e-6 and rep["max_even"] <= 1e-6 and rep["max_sign"] <= 1e-12
    rep = check_scaling_identities(curves_asym)
    assert rep["max_even"] <= 1e-6
    assert rep["odd"] == {} and rep["sign"] == {}
