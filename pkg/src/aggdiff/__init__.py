"""Deterministic particle scheme for 1D aggregation-diffusion equations with
nonlinear mobility on tori, plus oracles, diagnostics, and convergence studies."""

__version__ = "0.1.0"

from .density import PiecewiseDensity, l1_between, read_density_csv, wasserstein1, write_density_csv
from .diagnostics import (
    DiagnosticsRecord,
    dissipation_a2,
    energy,
    energy_dissipation_monitor,
    holder_half_estimate,
    total_variation,
    trajectory_diagnostics,
    tv_dissipation_inequality,
)
from .errors import (
    AggDiffError,
    BadParameter,
    BadValue,
    CFLViolation,
    ConfigError,
    DegenerateQuantile,
    DomainMismatch,
    InvalidState,
    MassMismatch,
    MassTooSmall,
    NegativeDensity,
    OutOfRange,
    ParseError,
    QuadratureFailure,
    StepTooSmall,
    UnknownKey,
)
from .particles import ParticleState, densities, init_particles, to_density
from .physics import (
    DiffusionSpec,
    KernelSpec,
    MobilitySpec,
    gaussian_bump,
    make_diffusion,
    make_mobility,
    mobility_product_bound_check,
    phi_v_quadrature,
    two_yukawa,
    validate_kernel,
    zero_kernel,
)
from .refsolver import GridDensity, exact_heat, fv_solve, fv_step, interface_velocity
from .scheme import SchemeConfig, Trajectory, integrate, rhs, step, suggest_dt_init, uniform_records
from .torus import TorusDomain
