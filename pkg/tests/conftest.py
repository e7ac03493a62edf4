from __future__ import annotations

import pytest

from nlbif import (
    asymmetric_cubic,
    build_ccurves,
    bump_diffusion,
    constant_diffusion,
    cubic,
    diffusion_from_knots,
)

# nondecreasing a with a(0) = 1 used by the knot census
KNOTS_NONDECREASING = [(0.0, 1.0, 0.0), (2.0, 1.6, 0.0), (4.0, 2.2, 0.0), (20.0, 3.0, 0.0)]
# dip-shaped a: pitchfork from zero at a(0), saddle-nodes on the j = 1 branch
DIP = dict(alpha=1.0, beta=-0.8, gamma=2.0, r0=1.5)


_ACCEPTANCE: dict[int, str] = {}


def report(criterion: int, passed: bool, detail: str) -> None:
    """Record one status line per acceptance criterion; shown in the terminal summary."""
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])


@pytest.fixture(scope="session")
def nl_cubic():
    return cubic()


@pytest.fixture(scope="session")
def nl_asym():
    return asymmetric_cubic()


@pytest.fixture(scope="session")
def curves_cubic(nl_cubic):
    return build_ccurves(nl_cubic, 4)


@pytest.fixture(scope="session")
def curves_asym(nl_asym):
    return build_ccurves(nl_asym, 4)


@pytest.fixture(scope="session")
def a_const():
    return constant_diffusion(1.0, 70.0)


@pytest.fixture(scope="session")
def a_knots():
    return diffusion_from_knots(KNOTS_NONDECREASING)


@pytest.fixture(scope="session")
def a_dip():
    return bump_diffusion(**DIP)


def tangent_diffusion(curve, nu: float, r_star: float):
    """Hermite ``a`` touching ``nu*c`` at ``r_star`` with matching slope."""
    c, dc = curve.exact(r_star)
    return diffusion_from_knots([(0.0, nu * c - 0.3, 0.0), (r_star, nu * c, nu * dc),
                                 (2 * r_star, nu * c + 0.2, 0.0)])
