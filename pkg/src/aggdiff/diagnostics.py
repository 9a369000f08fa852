"""Functionals evaluated on states and trajectories: energy, dissipation, TV, W1."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .density import PiecewiseDensity, wasserstein1
from .errors import InvalidState, ParseError
from .particles import ParticleState, densities, to_density
from .physics import DiffusionSpec, KernelSpec
from .scheme import Trajectory

# 3-point Gauss-Legendre on [0, 1]
_GL3_X = np.array([0.1127016653792583, 0.5, 0.8872983346207417])
_GL3_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-snapshot scalars written to the diagnostics CSV."""

    t: float
    mass: float
    linf: float
    linf_phi: float
    tv: float
    energy: float
    a2: float
    w1_to_initial: float

    def __post_init__(self):
        if not self.mass > 0.0:
            raise InvalidState("record mass must be positive")
        if self.a2 < 0.0 or self.tv < 0.0:
            raise InvalidState("a2 and tv are nonnegative by construction")


def energy(density: PiecewiseDensity, kernel: KernelSpec, diffusion: DiffusionSpec) -> float:
    """F^v_L: half the double kernel integral plus the W_v entropy integral.

    The interaction term uses 3-point Gauss-Legendre per cell pair per axis;
    diagonal cell pairs (which contain the kernel's kink at zero separation)
    are reduced exactly to 1d integrals 2*int_0^h K(u)(h-u)du before
    quadrature. The entropy term is an exact cell sum. Energies are comparable
    only within this package's W_v(1) = 0 normalization.
    """
    gaps = density.gaps()
    vals = density.values
    entropy = float(np.sum(diffusion.eval_w_v(vals) * gaps))
    if kernel.is_zero:
        return entropy
    dom = density.domain
    b = density.breakpoints
    m = b.size
    nodes = (b[:, None] + gaps[:, None] * _GL3_X[None, :]).ravel()
    wts = (gaps[:, None] * _GL3_W[None, :] * vals[:, None]).ravel()
    # blocked double sum keeps the pairwise matrix bounded in memory
    total = 0.0
    rows = max(1, 4_000_000 // nodes.size)
    for lo in range(0, nodes.size, rows):
        hi = min(nodes.size, lo + rows)
        d = dom.min_image(nodes[lo:hi, None] - nodes[None, :])
        total += float(wts[lo:hi] @ kernel.eval_k(d) @ wts)
    # swap the naive diagonal-block quadrature for the exact kink-split form:
    # int int_{cell^2} K(x - y) = 2 int_0^h K(min_image(u)) (h - u) du, split
    # additionally at u = L/2 where the minimal image folds (wide cells only)
    cell_nodes = b[:, None] + gaps[:, None] * _GL3_X[None, :]
    d_in = dom.min_image(cell_nodes[:, :, None] - cell_nodes[:, None, :])
    w_in = _GL3_W[:, None] * _GL3_W[None, :]
    naive_diag = np.sum(kernel.eval_k(d_in) * w_in[None, :, :], axis=(1, 2)) * gaps**2

    def diag_segment(lo, hi, h):
        width = hi - lo
        u = lo[:, None] + width[:, None] * _GL3_X[None, :]
        return width * np.sum(
            _GL3_W[None, :] * kernel.eval_k(dom.min_image(u)) * (h[:, None] - u), axis=1
        )

    half = 0.5 * dom.length
    split = np.minimum(gaps, half)
    exact_diag = 2.0 * diag_segment(np.zeros_like(gaps), split, gaps)
    wide = gaps > half
    if np.any(wide):
        exact_diag[wide] += 2.0 * diag_segment(
            np.full(np.sum(wide), half), gaps[wide], gaps[wide]
        )
    total += float(np.sum((exact_diag - naive_diag) * vals**2))
    return 0.5 * total + entropy


def dissipation_a2(state: ParticleState, diffusion: DiffusionSpec) -> float:
    """Discrete W^{1,2} dissipation (N/c_L) * sum_k (phi_v jump)^2, cyclic."""
    phi = diffusion.eval_phi_v(densities(state))
    g = phi - np.roll(phi, 1)
    return float(state.n / state.mass * np.sum(g * g))


def total_variation(density: PiecewiseDensity) -> float:
    """Cyclic sum of absolute cell-value jumps over the torus."""
    v = density.values
    return float(np.sum(np.abs(np.diff(v))) + abs(v[0] - v[-1]))


@dataclass
class TvInequalityReport:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12)


def tv_dissipation_inequality(state: ParticleState, diffusion: DiffusionSpec) -> TvInequalityReport:
    """Sequence inequality sum|a_{k+1}-a_k| <= max{1, N sum|a_{k+1}-a_k|^2}
    applied to a_k = phi_v(rho_k); returns both sides."""
    a = diffusion.eval_phi_v(densities(state))
    jumps = np.abs(a - np.roll(a, 1))
    lhs = float(np.sum(jumps))
    rhs = max(1.0, state.n * float(np.sum(jumps * jumps)))
    return TvInequalityReport(lhs=lhs, rhs=rhs)


def snapshot_record(
    state: ParticleState,
    kernel: KernelSpec,
    diffusion: DiffusionSpec,
    initial_normalized: PiecewiseDensity | None = None,
) -> DiagnosticsRecord:
    dens = to_density(state)
    rho = dens.values
    linf = float(np.max(rho))
    w1 = 0.0
    if initial_normalized is not None:
        w1 = wasserstein1(dens.normalized(), initial_normalized)
    derived_mass = float(np.sum(rho * dens.gaps()))
    return DiagnosticsRecord(
        t=state.t,
        mass=derived_mass,
        linf=linf,
        linf_phi=float(diffusion.eval_phi_v(np.asarray([linf]))[0]),
        tv=total_variation(dens),
        energy=energy(dens, kernel, diffusion),
        a2=dissipation_a2(state, diffusion),
        w1_to_initial=w1,
    )


def trajectory_diagnostics(
    traj: Trajectory, kernel: KernelSpec, diffusion: DiffusionSpec
) -> list[DiagnosticsRecord]:
    """One DiagnosticsRecord per snapshot, W1 measured to the first snapshot."""
    if not traj.snapshots:
        return []
    ref = to_density(traj.snapshots[0]).normalized()
    return [snapshot_record(s, kernel, diffusion, ref) for s in traj.snapshots]


@dataclass
class EnergyMonitorReport:
    """Energy/dissipation series with the fitted inequality constant.

    Per interval the monitor checks dF/dt <= -(1/2) a^2 + C (a + 1) using
    interval averages of a^2 and a; C is the smallest nonnegative constant
    validating every interval and is reported, never asserted against any
    pre-set value (the underlying constants are not explicit).
    """

    times: np.ndarray
    energies: np.ndarray
    a2: np.ndarray
    fitted_c: float
    int_a2: float
    delta_f: float
    tol_energy: float

    @property
    def energy_bounded(self) -> bool:
        return self.delta_f <= self.tol_energy


def energy_dissipation_monitor(
    traj: Trajectory,
    kernel: KernelSpec,
    diffusion: DiffusionSpec,
    tol_energy: float = 0.1,
) -> EnergyMonitorReport:
    if len(traj.snapshots) < 3:
        raise InvalidState("monitor needs at least 3 snapshots")
    ts = traj.times
    f = np.array([energy(to_density(s), kernel, diffusion) for s in traj.snapshots])
    a2 = np.array([dissipation_a2(s, diffusion) for s in traj.snapshots])
    a = np.sqrt(a2)
    df = np.diff(f) / np.diff(ts)
    a2_mid = 0.5 * (a2[:-1] + a2[1:])
    a_mid = 0.5 * (a[:-1] + a[1:])
    c_needed = (df + 0.5 * a2_mid) / (a_mid + 1.0)
    fitted = max(0.0, float(np.max(c_needed)))
    return EnergyMonitorReport(
        times=ts,
        energies=f,
        a2=a2,
        fitted_c=fitted,
        int_a2=float(np.trapezoid(a2, ts)),
        delta_f=float(f[-1] - f[0]),
        tol_energy=tol_energy,
    )


def holder_half_estimate(traj: Trajectory) -> float:
    """max over snapshot pairs of W1(normalized densities) / sqrt(|t-s|)."""
    if len(traj.snapshots) < 4:
        raise InvalidState("holder estimate needs at least 4 snapshots")
    dens = [to_density(s).normalized() for s in traj.snapshots]
    ts = traj.times
    best = 0.0
    for i in range(len(dens)):
        for j in range(i + 1, len(dens)):
            best = max(best, wasserstein1(dens[i], dens[j]) / np.sqrt(ts[j] - ts[i]))
    return float(best)


_DIAG_HEADER = "t,mass,linf,linf_phi,tv,energy,a2,w1_to_initial"


def write_diagnostics_csv(records: list[DiagnosticsRecord], path) -> None:
    with open(path, "w") as fh:
        fh.write(_DIAG_HEADER + "\n")
        for r in records:
            fh.write(
                ",".join(
                    f"{v:.17g}"
                    for v in (r.t, r.mass, r.linf, r.linf_phi, r.tv, r.energy, r.a2, r.w1_to_initial)
                )
                + "\n"
            )


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _DIAG_HEADER:
        raise ParseError("bad diagnostics header", line=1)
    data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
    return [DiagnosticsRecord(*row) for row in data]
