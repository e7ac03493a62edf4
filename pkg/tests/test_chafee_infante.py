from __future__ import annotations

import math

import numpy as np
import pytest

from nlbif import (
    amplitude,
    composite_time,
    gradient_energy,
    lam_and_r,
    reconstruct_profile,
    solve_energy,
    tau,
    time_map_sample,
)
from nlbif.chafee_infante import NoSolutionError
from nlbif.timemaps import arch_integral, energy_ceiling, energy_max, hump_counts, sides_for


def test_amplitude_closed_form(nl_cubic, nl_asym):
    # u^2/2 - u^4/4 = 3/16  ->  u^2 = 1/2
    assert amplitude(nl_cubic, 3 / 16, 1) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert amplitude(nl_cubic, 3 / 16, -1) == pytest.approx(-math.sqrt(0.5), abs=1e-15)
    # u^2/2 - u^4/16 = 3/4  ->  u^2 = 2 on the negative side
    assert amplitude(nl_asym, 0.75, -1) == pytest.approx(-math.sqrt(2.0), abs=1e-14)


@pytest.mark.parametrize("lam", [1.0, 4.0, 9.0, 2.5])
def test_time_map_small_energy_limit(nl_cubic, nl_asym, lam):
    for nl in (nl_cubic, nl_asym):
        for s in (1, -1):
            assert abs(tau(nl, 1e-12, lam, s) - math.pi / math.sqrt(lam)) <= 1e-6


def test_time_map_frozen_value_and_scaling(nl_cubic):
    t1 = tau(nl_cubic, 0.2, 1.0)
    assert t1 == pytest.approx(4.150271045540789, rel=1e-12)
    assert tau(nl_cubic, 0.2, 4.0) == pytest.approx(t1 / 2, rel=1e-14)
    assert composite_time(nl_cubic, 0.2, 1.0, 2, 1) == pytest.approx(2 * t1, rel=1e-14)


def test_time_map_increasing_in_energy(nl_cubic, nl_asym):
    E = np.linspace(0.01, 0.24, 12)
    for nl in (nl_cubic, nl_asym):
        t = [tau(nl, e, 1.0, 1) for e in E]
        assert np.all(np.diff(t) > 0)


def test_energy_limits(nl_cubic, nl_asym):
    assert energy_max(nl_cubic, 1, 1) == pytest.approx(0.25)
    assert energy_max(nl_asym, 1, -1) == pytest.approx(1.0)
    assert energy_max(nl_asym, 2, 1) == pytest.approx(0.25)   # both signs present
    assert energy_ceiling(nl_asym, 1, -1) == pytest.approx(1.0 - 1e-6)


def test_hump_counts():
    assert hump_counts(1, 1) == (1, 0)
    assert hump_counts(1, -1) == (0, 1)
    assert hump_counts(4, 1) == (2, 2)
    assert hump_counts(3, -1) == (1, 2)
    assert sides_for(2, 1) == (1, -1)
    with pytest.raises(ValueError):
        hump_counts(0)


def test_sample_matches_scalar_calls(nl_asym):
    s = time_map_sample(nl_asym, 0.15)
    assert s.tau_plus == pytest.approx(tau(nl_asym, 0.15, 1.0, 1), rel=1e-13)
    assert s.tau_minus == pytest.approx(tau(nl_asym, 0.15, 1.0, -1), rel=1e-13)
    assert s.arch_minus == pytest.approx(arch_integral(nl_asym, 0.15, -1), rel=1e-13)
    assert s.composite(3, -1) == pytest.approx(s.tau_plus + 2 * s.tau_minus, rel=1e-15)


def test_lam_and_r_frozen(nl_cubic, nl_asym):
    lam, r = lam_and_r(nl_cubic, 0.1, 1, 1)
    assert lam == pytest.approx(1.2055270420428037, rel=1e-11)
    assert r == pytest.approx(0.3602773217792461, rel=1e-10)
    # one hump of each sign: the starting sign does not matter
    assert lam_and_r(nl_asym, 0.1, 2, 1) == pytest.approx(lam_and_r(nl_asym, 0.1, 2, -1), rel=1e-14)


def test_solve_energy_inverts_composite_time(nl_cubic, nl_asym):
    for nl, lam, j, s in ((nl_cubic, 5.0, 1, 1), (nl_asym, 12.0, 3, -1), (nl_asym, 20.0, 2, 1)):
        E = solve_energy(nl, lam, j, s)
        assert composite_time(nl, E, lam, j, s) == pytest.approx(math.pi, rel=1e-12)


def test_gradient_energy_frozen_and_odd_scaling(nl_cubic):
    r1 = gradient_energy(nl_cubic, 5.0, 1, 1)
    assert r1 == pytest.approx(2.094727733050189, rel=1e-10)
    # odd f: r_j(lam) = j^2 r_1(lam / j^2)
    assert gradient_energy(nl_cubic, 20.0, 2, -1) == pytest.approx(4 * r1, rel=1e-10)


def test_no_solution_below_threshold(nl_cubic):
    with pytest.raises(NoSolutionError):
        solve_energy(nl_cubic, 0.99, 1)
    with pytest.raises(NoSolutionError):
        solve_energy(nl_cubic, 4.0, 2)
    with pytest.raises(NoSolutionError):
        solve_energy(nl_cubic, 1e6, 1)   # beyond the energy ceiling


@pytest.mark.parametrize("j,sign", [(1, 1), (2, -1), (3, 1), (4, -1)])
def test_profile_invariants(nl_asym, j, sign):
    lam = 1.8 * j * j
    p = reconstruct_profile(nl_asym, lam, j, sign)
    assert p.energy_defect(nl_asym) <= 1e-8
    assert abs(p.r_grid - p.r) / p.r <= 1e-6
    assert p.interior_sign_changes() == j - 1
    assert p.phi[0] == 0.0 and abs(p.phi[-1]) <= 1e-9
    assert np.sign(p.phi_x[0]) == sign
    assert p.phi.max() <= nl_asym.z_plus and p.phi.min() >= nl_asym.z_minus


def test_profile_frozen_asymmetric(nl_asym):
    p = reconstruct_profile(nl_asym, 9.0, 2, 1)
    assert p.r == pytest.approx(5.159195970525, rel=1e-9)
    assert p.phi.max() == pytest.approx(0.9451588264260262, rel=1e-8)
    assert p.phi.min() == pytest.approx(-0.7275535042758711, rel=1e-8)
