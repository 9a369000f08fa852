"""Independent oracles for the limit PDE: upwind finite volumes and exact heat."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .density import PiecewiseDensity
from .errors import BadParameter, CFLViolation, NegativeDensity, ParseError
from .physics import DiffusionSpec, KernelSpec, MobilitySpec
from .torus import TorusDomain

try:
    from . import _fast
except ImportError:  # pragma: no cover
    _fast = None

_MOB_CODES = {"constant": 0, "linear_cutoff": 1, "rational": 2}


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Cell averages on a uniform periodic grid of M cells."""

    domain: TorusDomain
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or v.size < 4:
            raise BadParameter("grid needs at least 4 cells")
        if np.any(v < -1e-12) or not np.all(np.isfinite(v)):
            raise BadParameter("cell averages must be finite and (numerically) nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return self.domain.length / self.m

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.dx)

    def cell_centers(self) -> np.ndarray:
        return self.domain.base + (np.arange(self.m) + 0.5) * self.dx

    def as_piecewise(self) -> PiecewiseDensity:
        edges = self.domain.base + np.arange(self.m) * self.dx
        return PiecewiseDensity(self.domain, edges, self.values.copy(), t=self.t)


def _kernel_interface_table(grid: GridDensity, kernel: KernelSpec) -> np.ndarray:
    """K'(min_image((r + 1/2) dx)) for r = 0..M-1: interface-to-center offsets."""
    r = np.arange(grid.m, dtype=float)
    return np.asarray(kernel.eval_kprime(grid.domain.min_image((r + 0.5) * grid.dx)), dtype=float)


def _interface_velocity_raw(values: np.ndarray, dx: float, tab: np.ndarray) -> np.ndarray:
    m = values.size
    idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    return -dx * (tab[idx] @ values)


def interface_velocity(grid: GridDensity, kernel: KernelSpec) -> np.ndarray:
    """u_{i+1/2} = -(K' * rho)(x_{i+1/2}) by periodic midpoint-rule convolution."""
    if kernel.is_zero:
        return np.zeros(grid.m)
    return _interface_velocity_raw(grid.values, grid.dx, _kernel_interface_table(grid, kernel))


def cfl_bound(
    grid: GridDensity, kernel: KernelSpec, diffusion: DiffusionSpec, safety: float = 0.4
) -> float:
    """safety * min(dx/max|u|, dx^2/(2 max phi_v'(rho))) at the current state."""
    dx = grid.dx
    bound = np.inf
    u = interface_velocity(grid, kernel)
    max_u = float(np.max(np.abs(u)))
    if max_u > 0.0:
        bound = dx / max_u
    max_pp = float(np.max(diffusion.eval_phi_v_prime(grid.values)))
    if max_pp > 0.0:
        bound = min(bound, dx * dx / (2.0 * max_pp))
    return safety * bound


def _flux_divergence(rho, dx, u, mobility, diffusion):
    phiv = np.asarray(diffusion.eval_phi_v(rho), dtype=float)
    rho_next = np.roll(rho, -1)
    rho_up = np.where(u >= 0.0, rho, rho_next)
    flux = rho_up * mobility.eval_v(rho_up) * u - (np.roll(phiv, -1) - phiv) / dx
    return (flux - np.roll(flux, 1)) / dx


def fv_step(
    grid: GridDensity,
    kernel: KernelSpec,
    mobility: MobilitySpec,
    diffusion: DiffusionSpec,
    dt: float,
) -> GridDensity:
    """One conservative Heun step of rho_t + d_x J = 0 with upwind transport.

    J_{i+1/2} = rho_up v(rho_up) u_{i+1/2} - (phi_v(rho_{i+1}) - phi_v(rho_i))/dx
    with rho_up selected by the sign of u. dt must respect the CFL bound
    (raises CFLViolation otherwise); fluxes telescope, so mass is conserved to
    rounding.
    """
    if dt <= 0.0:
        raise BadParameter("dt must be positive")
    limit = cfl_bound(grid, kernel, diffusion, safety=1.0)
    if dt > 0.4 * limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt = {dt} exceeds 0.4 * CFL = {0.4 * limit}")
    rho = grid.values
    dx = grid.dx
    u1 = interface_velocity(grid, kernel)
    d1 = _flux_divergence(rho, dx, u1, mobility, diffusion)
    pred = rho - dt * d1
    if kernel.is_zero:
        u2 = u1
    else:
        u2 = _interface_velocity_raw(pred, dx, _kernel_interface_table(grid, kernel))
    d2 = _flux_divergence(pred, dx, u2, mobility, diffusion)
    new = rho - 0.5 * dt * (d1 + d2)
    if float(np.min(new)) < -1e-12:
        raise NegativeDensity(f"cell dropped to {float(np.min(new))}")
    return GridDensity(grid.domain, new, t=grid.t + dt)


def fv_solve(
    rho0: GridDensity,
    kernel: KernelSpec,
    mobility: MobilitySpec,
    diffusion: DiffusionSpec,
    t_end: float,
    record_times,
    safety: float = 0.4,
) -> list[GridDensity]:
    """March with automatic CFL dt, landing exactly on every record time."""
    rt = np.asarray(record_times, dtype=float)
    if rt.size and (np.any(np.diff(rt) <= 0.0) or rt[0] < rho0.t or rt[-1] > t_end):
        raise BadParameter("record times must be increasing within [t0, t_end]")
    out: list[GridDensity] = []
    rho = rho0.values.copy()
    t = float(rho0.t)
    dx = rho0.dx

    use_fast = (
        _fast is not None
        and mobility.kind in _MOB_CODES
        and diffusion.closed_form
        and not (diffusion.family == "power" and mobility.kind == "rational" and diffusion.m != 2.0)
    )
    ktab = np.zeros(1)
    use_kernel = not kernel.is_zero
    if use_kernel:
        ktab = _kernel_interface_table(rho0, kernel)

    for t_target in rt:
        if t_target <= t:
            if t_target == t:
                out.append(GridDensity(rho0.domain, rho.copy(), t=t))
            continue
        if use_fast:
            fam = 0 if diffusion.family == "log" else 1
            t, _steps, status = _fast._fv_advance(
                rho, t, float(t_target), dx, safety, use_kernel, ktab,
                _MOB_CODES[mobility.kind], float(mobility.sbar), fam, float(diffusion.m),
            )
            if status == 3:
                raise NegativeDensity(f"FV solver failure near t = {t}")
        else:
            while t < t_target:
                g = GridDensity(rho0.domain, rho, t=t)
                dt = cfl_bound(g, kernel, diffusion, safety=safety)
                if not np.isfinite(dt):
                    t = float(t_target)
                    break
                landing = t_target - t <= dt
                if landing:
                    dt = t_target - t
                u1 = interface_velocity(g, kernel)
                d1 = _flux_divergence(rho, dx, u1, mobility, diffusion)
                pred = rho - dt * d1
                u2 = _interface_velocity_raw(pred, dx, ktab) if use_kernel else u1
                d2 = _flux_divergence(pred, dx, u2, mobility, diffusion)
                rho = rho - 0.5 * dt * (d1 + d2)
                if float(np.min(rho)) < -1e-12:
                    raise NegativeDensity(f"FV solver failure near t = {t}")
                t = float(t_target) if landing else t + dt
        out.append(GridDensity(rho0.domain, rho.copy(), t=float(t_target)))
    return out


def exact_heat(
    cos_coeffs, sin_coeffs, domain: TorusDomain, t: float, m_cells: int
) -> GridDensity:
    """Closed-form heat solution sampled as exact per-cell averages.

    rho0(x) = a_0 + sum_n [a_n cos(2 pi n x / L) + b_n sin(2 pi n x / L)] with
    the coefficient arrays indexed by n (band-limited input, at most 64
    modes); each mode decays by exp(-(2 pi n / L)^2 t).
    """
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)
    if a.size != b.size or a.size < 1 or a.size > 65:
        raise BadParameter("need matching coefficient arrays with at most 64 modes (plus mean)")
    L = domain.length
    dx = L / m_cells
    edges = domain.base + np.arange(m_cells + 1) * dx
    vals = np.full(m_cells, a[0])
    for n in range(1, a.size):
        wn = 2.0 * np.pi * n / L
        decay = np.exp(-(wn**2) * t)
        s = np.sin(wn * edges)
        c = np.cos(wn * edges)
        # exact cell averages of cos / sin
        avg_cos = (s[1:] - s[:-1]) / (wn * dx)
        avg_sin = -(c[1:] - c[:-1]) / (wn * dx)
        vals = vals + decay * (a[n] * avg_cos + b[n] * avg_sin)
    return GridDensity(domain, np.maximum(vals, 0.0), t=t)


def write_grid_csv(grid: GridDensity, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# M={grid.m} L={grid.domain.length:.17g} t={grid.t:.17g}\n")
        fh.write("x_center,value\n")
        for x, v in zip(grid.cell_centers(), grid.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def read_grid_csv(path) -> GridDensity:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError("missing grid comment line", line=1)
    meta = {}
    for tok in lines[0][1:].split():
        if "=" in tok:
            k, _, v = tok.partition("=")
            meta[k] = float(v)
    if len(lines) < 2 or lines[1].strip() != "x_center,value":
        raise ParseError("missing `x_center,value` header", line=2)
    data = np.loadtxt(io.StringIO("\n".join(lines[2:])), delimiter=",", ndmin=2)
    grid = GridDensity(TorusDomain(meta["L"]), data[:, 1], t=meta.get("t", 0.0))
    if int(meta.get("M", grid.m)) != grid.m:
        raise ParseError(f"declared M={int(meta['M'])} but {grid.m} rows", line=1)
    return grid
