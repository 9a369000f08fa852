"""Ordered particle states and mass-quantile initialization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .density import PiecewiseDensity
from .errors import BadParameter, DegenerateQuantile, InvalidState, MassTooSmall
from .quadrature import adaptive_simpson
from .torus import TorusDomain

# 5-point Gauss-Legendre on [0, 1] (used for the numeric CDF of closed-form rho0)
_GL5_X = np.array(
    [0.046910077030668, 0.230765344947158, 0.5, 0.769234655052841, 0.953089922969332]
)
_GL5_W = np.array(
    [0.118463442528095, 0.239314335249683, 0.284444444444444, 0.239314335249683, 0.118463442528095]
)


@dataclass(frozen=True, eq=False)
class ParticleState:
    """Ordered particle positions carrying total mass c_L and a time stamp.

    Positions are monotone unwrapped representatives:
    x_0 < x_1 < ... < x_{N-1} < x_0 + L. Gap arithmetic (including the wrap
    gap back to x_0 + L) therefore never branches; wrapping happens only at
    I/O boundaries.
    """

    domain: TorusDomain
    mass: float
    positions: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.positions, dtype=float))
        L = self.domain.length
        if x.ndim != 1 or x.size < 2:
            raise InvalidState("need at least two particles")
        if not (0.0 < self.mass <= 1.0):
            raise InvalidState(f"total mass c_L must lie in (0, 1], got {self.mass}")
        if self.t < 0.0:
            raise InvalidState("time stamp must be nonnegative")
        if not np.all(np.isfinite(x)):
            raise InvalidState("positions must be finite")
        if np.any(np.diff(x) <= 0.0) or x[-1] >= x[0] + L:
            raise InvalidState("positions must be strictly ordered with a positive wrap gap")
        gap_sum = float(np.sum(np.diff(x))) + float(x[0] + L - x[-1])
        if abs(gap_sum - L) > 1e-12 * L:
            raise InvalidState(f"gaps sum to {gap_sum}, expected {L}")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "mass", float(self.mass))

    @property
    def n(self) -> int:
        return self.positions.size

    def gaps(self) -> np.ndarray:
        x = self.positions
        g = np.empty_like(x)
        g[:-1] = np.diff(x)
        g[-1] = x[0] + self.domain.length - x[-1]
        return g

    def with_positions(self, positions: np.ndarray, t: float) -> "ParticleState":
        return ParticleState(self.domain, self.mass, positions, t=t)


def densities(state: ParticleState) -> np.ndarray:
    """Cell densities rho_k = c_L / (N * gap_k), cyclic with the wrap gap."""
    return state.mass / (state.n * state.gaps())


def to_density(state: ParticleState) -> PiecewiseDensity:
    """Piecewise-constant reconstruction: breakpoints are the positions."""
    return PiecewiseDensity(
        state.domain, state.positions.copy(), densities(state), mass=state.mass, t=state.t
    )


def init_particles(
    rho0: PiecewiseDensity | Callable[[np.ndarray], np.ndarray],
    n: int,
    domain: TorusDomain,
    breakpoint_hints: Sequence[float] | None = None,
) -> ParticleState:
    """Place N particles at the base-anchored mass quantiles of rho0.

    x_0 = -L/2 and x_k is the c_L*k/N quantile of rho0 for k >= 1, with the
    rightmost-point convention on flat CDF stretches (particles land at the
    right edge of vacuum gaps). rho0 is either a PiecewiseDensity (exact cell
    arithmetic) or a nonnegative vectorized callable on [-L/2, L/2]
    (numerically integrated CDF; pass kink locations in ``breakpoint_hints``
    so the quadrature panels stay smooth).

    Raises MassTooSmall for nonpositive mass, BadParameter for mass > 1, and
    DegenerateQuantile when two quantiles coincide (reported, never jittered).
    """
    if n < 2:
        raise BadParameter("need n >= 2 particles")
    if isinstance(rho0, PiecewiseDensity):
        edges, vals = rho0.canonical_cells()
        if not rho0.domain.same_as(domain):
            raise BadParameter("rho0 lives on a different torus")
        c_total = rho0.mass
        cum = np.concatenate(([0.0], np.cumsum(vals * np.diff(edges))))
        cum[-1] = c_total
    else:
        edges, cum = _numeric_cdf(rho0, domain, breakpoint_hints)
        vals = None
        c_total = float(cum[-1])
    if not np.isfinite(c_total) or c_total <= 0.0:
        raise MassTooSmall(f"rho0 mass {c_total} is not positive")
    if c_total > 1.0 + 1e-12:
        raise BadParameter(f"rho0 mass {c_total} exceeds 1")
    c_total = min(c_total, 1.0)

    z = c_total * np.arange(1, n, dtype=float) / n
    if vals is not None:
        # exact inversion on the piecewise-constant CDF, rightmost convention
        idx = np.searchsorted(cum, z, side="right") - 1
        idx = np.clip(idx, 0, len(vals) - 1)
        cell_v = vals[idx]
        safe = np.where(cell_v > 0.0, cell_v, 1.0)
        xq = edges[idx] + (z - cum[idx]) / safe
    else:
        xq = _invert_numeric_cdf(rho0, edges, cum, z)
    positions = np.concatenate(([domain.base], xq))
    if np.any(np.diff(positions) <= 0.0) or positions[-1] >= domain.base + domain.length:
        raise DegenerateQuantile(
            "coincident quantiles: rho0 has a spike narrower than the quantile resolution"
        )
    return ParticleState(domain, c_total, positions, t=0.0)


def _numeric_cdf(f, domain: TorusDomain, hints) -> tuple[np.ndarray, np.ndarray]:
    """Panelwise Gauss-Legendre cumulative of a closed-form density.

    The total mass is pinned by adaptive Simpson at 1e-12 absolute tolerance;
    the GL5 panel sums provide the monotone cumulative used for inversion
    (they agree with the Simpson total to machine precision on panel-smooth
    integrands).
    """
    L, base = domain.length, domain.base
    pts = [base, base + L]
    if hints is not None:
        for h in hints:
            hw = domain.wrap(float(h))
            if base < hw < base + L:
                pts.append(hw)
    pts = np.unique(np.asarray(pts))
    n_panels = 1 << 14
    edges = np.unique(np.concatenate([np.linspace(a, b, max(2, int(np.ceil((b - a) / L * n_panels)) + 1)) for a, b in zip(pts[:-1], pts[1:])]))
    h = np.diff(edges)
    nodes = edges[:-1, None] + h[:, None] * _GL5_X[None, :]
    fv = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    if np.any(fv < -1e-12 * max(1.0, float(np.max(np.abs(fv))))):
        raise BadParameter("rho0 must be nonnegative")
    fv = np.maximum(fv, 0.0)
    panel = h * (fv @ _GL5_W)
    cum = np.concatenate(([0.0], np.cumsum(panel)))
    # total mass pinned by adaptive Simpson at 1e-12 absolute
    total = sum(
        adaptive_simpson(lambda x: max(float(f(np.asarray([x]))[0]), 0.0), a, b, tol=1e-12 / len(pts))
        for a, b in zip(pts[:-1], pts[1:])
    )
    if abs(total - cum[-1]) > 1e-9 * max(1.0, abs(total)):
        raise MassTooSmall(
            f"quadrature rules disagree on rho0 mass ({total} vs {cum[-1]}); rho0 too rough"
        )
    cum[-1] = total
    return edges, cum


def _invert_numeric_cdf(f, edges, cum, z) -> np.ndarray:
    """Vectorized rightmost-point bisection for F(x) <= z on the panel grid."""
    idx = np.searchsorted(cum, z, side="right") - 1
    idx = np.clip(idx, 0, len(edges) - 2)
    lo = edges[idx].copy()
    hi = edges[idx + 1].copy()
    c0 = cum[idx]
    z_off = z - c0

    def local_mass(a, b):
        width = b - a
        nodes = a[:, None] + width[:, None] * _GL5_X[None, :]
        fv = np.maximum(np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape), 0.0)
        return width * (fv @ _GL5_W)

    a0 = edges[idx]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = local_mass(a0, mid) <= z_off
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-16 * np.maximum(1.0, np.abs(hi))):
            break
    return 0.5 * (lo + hi)
