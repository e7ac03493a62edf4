from __future__ import annotations

import math

import numpy as np
import pytest

from nlbif import assemble, constant_diffusion, epsilon_sweep, find_equilibria, positive_count
from nlbif.spectral import epsilon_tilde, epsilon_zero, eps_tilde_for, operator_at, refine_n, spectral_report


def test_zero_state_spectrum(nl_cubic):
    n = 400
    op = assemble(np.zeros(n + 2), 1.0, constant_diffusion(1.0), nl_cubic, 0.0, mode="local")
    ev = op.top_eigenvalues(4)
    h = math.pi / (n + 1)
    k = np.arange(1, 5)
    exact_discrete = 1.0 - 4 / h**2 * np.sin(k * h / 2) ** 2
    assert np.allclose(ev, exact_discrete, atol=1e-9)
    # second-order truncation: error ~ k^4 h^2 / 12
    assert np.all(np.abs(ev - (1.0 - k**2)) <= 1.01 * k**4 * h**2 / 12)


def test_secular_solver_matches_dense(nl_cubic, a_const, curves_cubic):
    p = [q for q in find_equilibria(a_const, curves_cubic, 9.5).points if q.j == 2][0]
    op = operator_at(p, nl_cubic, a_const, 301, mode="nonlocal", eps=-3.7)
    dense = np.sort(np.linalg.eigvalsh(op.matrix()))[::-1][:6]
    assert np.allclose(op.top_eigenvalues(6), dense, atol=1e-9 * (1 + np.abs(dense)))
    M = op.matrix()
    assert np.array_equal(M, M.T)


def test_with_eps_shares_decomposition(nl_cubic, a_const, curves_cubic):
    p = find_equilibria(a_const, curves_cubic, 5.0).points[0]
    op = operator_at(p, nl_cubic, a_const, 101, mode="local")
    other = op.with_eps(2.0)
    _ = op.decomposition
    assert other._dec is op._dec
    assert other.eps == 2.0 and op.eps == 0.0


def test_modes_and_validation(nl_cubic, a_dip):
    psi = np.sin(np.linspace(0, math.pi, 52)) * 0.5
    op = assemble(psi, 1.0, a_dip, nl_cubic, 1.0)
    assert op.mode == "linearized"
    assert op.eps == pytest.approx(epsilon_zero(1.0, float(a_dip.a(1.0)), float(a_dip.da(1.0))))
    with pytest.raises(ValueError):
        assemble(psi, 1.0, a_dip, nl_cubic, 1.0, mode="nonlocal")
    with pytest.raises(ValueError):
        assemble(psi, 1.0, a_dip, nl_cubic, 1.0, mode="bogus")
    with pytest.raises(ValueError):
        assemble(psi, 1.0, a_dip, nl_cubic, 1.0, n=10)


def test_epsilon_formulas():
    assert epsilon_zero(2.0, 1.0, 0.5) == pytest.approx(-4.0)
    assert epsilon_tilde(2.0, 1.0, -0.25) == pytest.approx(4.0)
    assert refine_n(2001) == 4003


def test_counts_match_index_constant_a(nl_cubic, a_const, curves_cubic):
    es = find_equilibria(a_const, curves_cubic, 9.5)
    for p in es.points:
        rep = spectral_report(p, nl_cubic, a_const, 501, refine=True)
        assert rep.positive == p.morse_index
        assert not rep.indeterminate
        assert rep.refinement[1][0] == 1003


def test_counts_match_index_dip(nl_cubic, a_dip, curves_cubic):
    es = find_equilibria(a_dip, curves_cubic, 1.0)
    for p in es.points:
        rep = positive_count(operator_at(p, nl_cubic, a_dip, 501))
        assert rep.positive == p.morse_index, (p.j, p.r)


def test_epsilon_sweep_branch_monotone_and_crossing(nl_cubic, a_const, curves_cubic):
    p = [q for q in find_equilibria(a_const, curves_cubic, 5.0).points if (q.j, q.sign) == (2, 1)][0]
    op = operator_at(p, nl_cubic, a_const, 801)
    et = eps_tilde_for(p, curves_cubic[(2, 1)], a_const)
    sw = epsilon_sweep(op, np.linspace(et - 20, et + 20, 41), j=2, eps_tilde=et)
    assert sw.monotone(1e-8)
    assert abs(sw.mu_at_tilde) < 1e-3
    assert sw.eps_zero_discrete == pytest.approx(et, rel=1e-2)
    assert sw.table().shape == (41, 1 + sw.mu.shape[1])
    with pytest.raises(ValueError):
        epsilon_sweep(op, [1.0, 0.0], j=2, eps_tilde=et)
