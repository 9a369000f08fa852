"""Piecewise-constant torus densities: CDF, pseudo-inverse, exact L1, CSV I/O."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, MassMismatch, OutOfRange, ParseError
from .torus import TorusDomain


@dataclass(frozen=True, eq=False)
class PiecewiseDensity:
    """Density that is constant on cells [b_k, b_{k+1}) of a torus.

    Breakpoints are monotone representatives: b_0 < b_1 < ... < b_{M-1} with
    b_{M-1} < b_0 + L; the last cell wraps around to b_0 + L. The CDF and the
    pseudo-inverse are anchored at b_0 and live on the unwrapped interval
    [b_0, b_0 + L], so for a density built from an ordered particle state the
    pseudo-inverse returns the particle positions themselves.
    """

    domain: TorusDomain
    breakpoints: np.ndarray
    values: np.ndarray
    mass: float | None = None
    t: float = 0.0
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.breakpoints, dtype=float))
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        L = self.domain.length
        if b.ndim != 1 or v.shape != b.shape or b.size < 1:
            raise BadParameter("breakpoints/values must be 1d arrays of equal length >= 1")
        if b.size > 1 and not np.all(np.diff(b) > 0.0):
            raise BadParameter("breakpoints must be strictly increasing")
        if b[-1] - b[0] >= L:
            raise BadParameter("breakpoint span must be below one period")
        if np.any(v < 0.0) or not np.all(np.isfinite(v)):
            raise BadParameter("cell values must be finite and nonnegative")
        gaps = np.empty_like(b)
        gaps[:-1] = np.diff(b)
        gaps[-1] = b[0] + L - b[-1]
        cell_masses = v * gaps
        total = float(np.sum(cell_masses))
        if total <= 0.0:
            raise BadParameter("density must carry positive total mass")
        mass = self.mass if self.mass is not None else total
        if abs(mass - total) > 1e-12 * max(mass, total):
            raise BadParameter(
                f"declared mass {mass} disagrees with cell sum {total} beyond 1e-12 relative"
            )
        cum = np.concatenate(([0.0], np.cumsum(cell_masses)))
        cum[-1] = mass  # pin the endpoint so cdf(b_0 + L) == mass exactly
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mass", float(mass))
        object.__setattr__(self, "_cum", cum)

    @property
    def n_cells(self) -> int:
        return self.breakpoints.size

    def gaps(self) -> np.ndarray:
        b = self.breakpoints
        g = np.empty_like(b)
        g[:-1] = np.diff(b)
        g[-1] = b[0] + self.domain.length - b[-1]
        return g

    def _to_chain(self, x):
        """Map torus points onto the unwrapped chain interval [b_0, b_0 + L)."""
        b0 = self.breakpoints[0]
        L = self.domain.length
        r = (np.asarray(x, dtype=float) - b0) % L
        r = np.where(r >= L, r - L, r)
        return b0 + r

    def eval(self, x):
        """Density value at torus point(s) x."""
        xr = self._to_chain(x)
        idx = np.searchsorted(self.breakpoints, xr, side="right") - 1
        out = self.values[np.clip(idx, 0, self.n_cells - 1)]
        if np.ndim(x) == 0:
            return float(out)
        return out

    def cdf(self, x):
        """Cumulative mass from the chain anchor b_0 up to x.

        x is read as a representative in [b_0, b_0 + L]; the exact right
        endpoint returns the total mass. Piecewise linear and nondecreasing.
        """
        b0 = self.breakpoints[0]
        L = self.domain.length
        xa = np.asarray(x, dtype=float)
        at_end = xa >= b0 + L - 1e-15 * L
        xr = self._to_chain(xa)
        idx = np.clip(np.searchsorted(self.breakpoints, xr, side="right") - 1, 0, self.n_cells - 1)
        out = self._cum[idx] + self.values[idx] * (xr - self.breakpoints[idx])
        out = np.where(at_end, self.mass, out)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def pseudo_inverse(self, z):
        """Generalized inverse X(z) of the CDF on [0, mass].

        Right-edge convention on flat CDF segments (vacuum cells):
        X(z) = sup{x : cdf(x) <= z}, so X(0) = b_0 and X(mass) = b_0 + L.
        """
        za = np.asarray(z, dtype=float)
        if np.any(za < -1e-15 * self.mass) or np.any(za > self.mass * (1.0 + 1e-15)):
            raise OutOfRange(f"pseudo_inverse argument outside [0, {self.mass}]")
        za = np.clip(za, 0.0, self.mass)
        idx = np.searchsorted(self._cum, za, side="right") - 1
        # z = 0 anchors at b_0 even when leading cells are vacuum
        idx = np.where(za <= 0.0, 0, idx)
        b0 = self.breakpoints[0]
        L = self.domain.length
        last = idx >= self.n_cells
        idx_c = np.clip(idx, 0, self.n_cells - 1)
        vals = self.values[idx_c]
        safe = np.where(vals > 0.0, vals, 1.0)
        out = self.breakpoints[idx_c] + (za - self._cum[idx_c]) / safe
        out = np.where(last, b0 + L, out)
        if np.ndim(z) == 0:
            return float(out)
        return out

    def normalized(self) -> "PiecewiseDensity":
        """Same shape rescaled to unit mass (for Wasserstein comparisons)."""
        return PiecewiseDensity(
            self.domain, self.breakpoints.copy(), self.values / self.mass, mass=1.0, t=self.t
        )

    def canonical_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell edges and values re-anchored at the domain base -L/2.

        Returns (edges, vals) with edges[0] = -L/2, edges[-1] = L/2 and vals[k]
        the density on [edges[k], edges[k+1]). Used for base-anchored quantiles
        and for merging against grid densities.
        """
        L = self.domain.length
        base = self.domain.base
        b = self.domain.wrap(self.breakpoints)
        order = np.argsort(b, kind="stable")
        bw = b[order]
        vw = self.values[order]
        if bw[0] > base:
            # the cell straddling the seam owns the stretch [base, bw[0])
            edges = np.concatenate(([base], bw, [base + L]))
            vals = np.concatenate(([self.eval(base)], vw))
        else:
            edges = np.concatenate((bw, [base + L]))
            vals = vw
        return edges, vals


def l1_between(d1: PiecewiseDensity, d2: PiecewiseDensity, window=None) -> float:
    """Exact integral of |d1 - d2| over the torus (or over a window).

    Both functions are piecewise constant, so merging their canonical cell
    edges makes the integrand constant on every merged cell.
    """
    if window is None:
        lo, hi = d1.domain.base, d1.domain.base + d1.domain.length
    else:
        lo, hi = window
    e1, _ = d1.canonical_cells()
    e2, _ = d2.canonical_cells()
    edges = np.unique(np.concatenate((e1, e2, [lo, hi])))
    edges = edges[(edges >= lo) & (edges <= hi)]
    mids = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    return float(np.sum(np.abs(d1.eval(mids) - d2.eval(mids)) * widths))


def wasserstein1(d1: PiecewiseDensity, d2: PiecewiseDensity) -> float:
    """L1 distance between the pseudo-inverses of two equal-mass densities.

    Callers normalize to unit mass (the Wasserstein-1 identity holds for
    probability densities); both pseudo-inverses are taken unwrapped on their
    own chains with the shared base-point convention, with no optimization
    over torus rotations. Exact: the difference of two piecewise-linear
    functions is integrated by splitting at merged knots and sign changes.
    """
    if abs(d1.mass - d2.mass) > 1e-10 * max(d1.mass, d2.mass, 1.0):
        raise MassMismatch(f"masses differ: {d1.mass} vs {d2.mass}")
    m = min(d1.mass, d2.mass)
    knots = np.concatenate((d1._cum, d2._cum, [0.0, m]))
    knots = np.unique(np.clip(knots, 0.0, m))
    g = d1.pseudo_inverse(knots) - d2.pseudo_inverse(knots)
    g0, g1 = g[:-1], g[1:]
    dz = np.diff(knots)
    same = g0 * g1 >= 0.0
    area_same = 0.5 * np.abs(g0 + g1) * dz
    denom = np.abs(g0) + np.abs(g1)
    denom = np.where(denom > 0.0, denom, 1.0)
    area_cross = 0.5 * (g0 * g0 + g1 * g1) / denom * dz
    return float(np.sum(np.where(same, area_same, area_cross)))


def write_density_csv(density: PiecewiseDensity, path) -> None:
    """Snapshot CSV: comment line, `breakpoint,value` header, 17 significant digits.

    The representative chain is shifted by a whole number of periods so the
    first breakpoint lies in the fundamental interval (wrapping happens only
    at this I/O boundary).
    """
    L = density.domain.length
    b0 = density.breakpoints[0]
    shift = L * np.floor((b0 - density.domain.base) / L)
    b = density.breakpoints - shift
    with open(path, "w") as fh:
        fh.write(f"# L={L:.17g} mass={density.mass:.17g} t={density.t:.17g}\n")
        fh.write("breakpoint,value\n")
        for bk, vk in zip(b, density.values):
            fh.write(f"{bk:.17g},{vk:.17g}\n")


def read_density_csv(path) -> PiecewiseDensity:
    """Parse a snapshot written by :func:`write_density_csv`."""
    with open(path) as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError("missing `# L=... mass=... t=...` comment line", line=1)
    meta = {}
    for tok in lines[0][1:].split():
        if "=" in tok:
            k, _, v = tok.partition("=")
            meta[k] = float(v)
    for key in ("L", "mass", "t"):
        if key not in meta:
            raise ParseError(f"comment line lacks {key}=", line=1)
    if len(lines) < 2 or lines[1].strip() != "breakpoint,value":
        raise ParseError("missing `breakpoint,value` header", line=2)
    data = np.loadtxt(io.StringIO("\n".join(lines[2:])), delimiter=",", ndmin=2)
    dom = TorusDomain(meta["L"])
    return PiecewiseDensity(dom, data[:, 0], data[:, 1], mass=meta["mass"], t=meta["t"])
