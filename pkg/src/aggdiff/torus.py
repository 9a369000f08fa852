"""Periodic domain geometry: wrapping and minimal-image arithmetic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter


@dataclass(frozen=True)
class TorusDomain:
    """Torus of length L identified with the fundamental interval [-L/2, L/2).

    All pairwise kernel arguments go through :meth:`min_image`; raw coordinate
    differences are meaningful only between monotone representatives.
    """

    length: float
    base: float = field(init=False)

    def __post_init__(self):
        if not (self.length > 0.0 and np.isfinite(self.length)):
            raise BadParameter(f"torus length must be positive, got {self.length}")
        object.__setattr__(self, "base", -0.5 * self.length)

    def wrap(self, x):
        """Representative of x in [-L/2, L/2). Accepts scalars or arrays."""
        L = self.length
        y = (np.asarray(x, dtype=float) - self.base) % L + self.base
        # float residue can round up to exactly base + L; fold it back
        y = np.where(y >= self.base + L, y - L, y)
        if np.ndim(x) == 0:
            return float(y)
        return y

    def min_image(self, dx):
        """Representative of a difference in (-L/2, L/2].

        This is the argument convention for K and K' in every pairwise sum.
        Antisymmetric except on the half-period boundary, where both signs
        map to +L/2.
        """
        L = self.length
        d = np.asarray(dx, dtype=float)
        r = d - L * np.round(d / L)
        r = np.where(r <= -0.5 * L, r + L, r)
        r = np.where(r > 0.5 * L, r - L, r)
        if np.ndim(dx) == 0:
            return float(r)
        return r

    def same_as(self, other: "TorusDomain", rtol: float = 1e-12) -> bool:
        return abs(self.length - other.length) <= rtol * self.length
