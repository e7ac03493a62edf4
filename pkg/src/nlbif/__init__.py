"""Equilibria, bifurcations and dynamics of ``u_t = a(||u_x||^2) u_xx + nu f(u)`` on (0, pi)."""

from .ccurves import CCurve, HorizonError, build_ccurve, build_ccurves, ccurve_derivative, check_scaling_identities
from .chafee_infante import (
    EquilibriumCI,
    NoSolutionError,
    gradient_energy,
    lam_and_r,
    reconstruct_profile,
    solve_energy,
)
from .equilibria import (
    BifurcationDiagram,
    BifurcationEvent,
    BranchPoint,
    EquilibriumSet,
    classify_point,
    equilibrium_profile,
    find_equilibria,
    sweep,
)
from .model import (
    Diffusion,
    Nonlinearity,
    asymmetric_cubic,
    build_primitive,
    build_primitive_a,
    bump_diffusion,
    constant_diffusion,
    cubic,
    diffusion_from_knots,
    polynomial,
    validate_diffusion,
    validate_nonlinearity,
)
from .pdesim import SimModel, SimState, TrajectoryLog, evolve, lyapunov, step
from .spectral import DiscretizedOperator, SpectralReport, assemble, epsilon_sweep, positive_count
from .timemaps import amplitude, composite_time, tau, time_map_sample

__version__ = "0.1.0"
