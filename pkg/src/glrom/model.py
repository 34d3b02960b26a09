"""Problem data: permeability fields, state nonlinearity, sources, parameters.

The diffusion coefficient factorizes as kappa(x; u, mu) = kappa_q(x) * b(u, mu)
with a single spatial field kappa_q and an exponential state factor b.  The
spatial field is piecewise constant per fine triangle: background 1 with a set
of high-contrast channel strips and inclusions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import FineMesh, triangle_centroids

__all__ = [
    "ChannelLayout",
    "DEFAULT_LAYOUT",
    "PermeabilityField",
    "channel_permeability",
    "load_permeability_csv",
    "save_permeability_csv",
    "Nonlinearity",
    "source_term",
    "ParameterSet",
]


@dataclass(frozen=True)
class ChannelLayout:
    """Axis-aligned rectangles (x0, x1, y0, y1) carrying the high coefficient.

    With rotated=True membership is tested on swapped coordinates, i.e. the
    whole pattern is reflected across the main diagonal.
    """

    strips: tuple[tuple[float, float, float, float], ...]
    rotated: bool = False


# Three long horizontal channels (width 0.03, centered at y = 0.22, 0.52, 0.82)
# plus four short inclusions scattered between them.
DEFAULT_LAYOUT = ChannelLayout(
    strips=(
        (0.05, 0.95, 0.205, 0.235),
        (0.05, 0.95, 0.505, 0.535),
        (0.05, 0.95, 0.805, 0.835),
        (0.15, 0.30, 0.400, 0.430),
        (0.55, 0.70, 0.370, 0.400),
        (0.30, 0.45, 0.660, 0.690),
        (0.65, 0.80, 0.100, 0.130),
    )
)


@dataclass(frozen=True)
class PermeabilityField:
    """Per-triangle spatial permeability values."""

    values: np.ndarray
    eta: float  # contrast used to build the field (informational)

    @property
    def n_triangles(self) -> int:
        return self.values.size


def channel_permeability(
    mesh: FineMesh, eta: float = 1.0e6, layout: ChannelLayout = DEFAULT_LAYOUT
) -> PermeabilityField:
    """Background-1 field with value eta inside the layout rectangles.

    Membership is decided by the triangle centroid, so each triangle gets a
    single value and the field is exactly reproducible on any aligned mesh.
    """
    if eta < 1.0:
        raise ValueError(f"contrast eta must be >= 1, got {eta}")
    for x0, x1, y0, y1 in layout.strips:
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise ValueError(f"strip ({x0},{x1},{y0},{y1}) not inside the unit square")
    c = triangle_centroids(mesh)
    px, py = (c[:, 1], c[:, 0]) if layout.rotated else (c[:, 0], c[:, 1])
    values = np.ones(mesh.n_triangles)
    for x0, x1, y0, y1 in layout.strips:
        inside = (px >= x0) & (px <= x1) & (py >= y0) & (py <= y1)
        values[inside] = eta
    return PermeabilityField(values=values, eta=float(eta))


def load_permeability_csv(path, mesh: FineMesh) -> PermeabilityField:
    """Read one per-triangle value per row (header optional)."""
    raw = np.genfromtxt(path, delimiter=",", comments="#", skip_header=0, dtype=float)
    vals = np.atleast_1d(raw).ravel()
    vals = vals[~np.isnan(vals)]
    if vals.size != mesh.n_triangles:
        raise ValueError(
            f"permeability file has {vals.size} values, mesh has {mesh.n_triangles} triangles"
        )
    if np.any(vals <= 0):
        raise ValueError("permeability values must be strictly positive")
    return PermeabilityField(values=vals, eta=float(vals.max() / vals.min()))


def save_permeability_csv(path, perm: PermeabilityField) -> None:
    np.savetxt(path, perm.values, delimiter=",")


@dataclass(frozen=True)
class Nonlinearity:
    """Exponential state factor b(u, mu) = exp(mu * (shift + u)).

    shift=0 gives the plain exponential family; shift=0.9 the shifted one.
    The exponent is clamped at +-clamp to avoid floating overflow during
    Newton transients; solvers check accepted states against the clamp and
    report divergence instead of silently flattening the coefficient.
    """

    shift: float = 0.0
    clamp: float = 700.0

    def exponent(self, u, mu: float):
        return mu * (self.shift + np.asarray(u, dtype=float))

    def b(self, u, mu: float):
        return np.exp(np.clip(self.exponent(u, mu), -self.clamp, self.clamp))

    def db(self, u, mu: float):
        """Derivative with respect to u; exact for this family: mu * b."""
        return mu * self.b(u, mu)

    def clamp_active(self, u, mu: float) -> bool:
        e = self.exponent(u, mu)
        return bool(np.any(np.abs(e) >= self.clamp))


def source_term(points: np.ndarray, variant: str = "k2pi") -> np.ndarray:
    """Forcing evaluated at (n, 2) points.

    Variants: "k2pi" -> 1 + sin(2 pi x) sin(2 pi y),
              "k4pi" -> 1 + sin(4 pi x) sin(4 pi y).
    """
    p = np.atleast_2d(points)
    if variant == "k2pi":
        k = 2.0 * np.pi
    elif variant == "k4pi":
        k = 4.0 * np.pi
    else:
        raise ValueError(f"unknown source variant {variant!r}")
    return 1.0 + np.sin(k * p[:, 0]) * np.sin(k * p[:, 1])


@dataclass(frozen=True)
class ParameterSet:
    """One offline or online problem instance.

    u0_kind selects the initial state: "w0" scales the auxiliary linear
    steady solution by u0_scale, "zero" starts from rest, "vector" uses the
    explicit full-node u0_vector.
    """

    mu_values: tuple[float, ...]
    source: str = "k2pi"
    u0_kind: str = "w0"
    u0_scale: float = 1.0
    u0_vector: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.mu_values) == 0:
            raise ValueError("at least one mu value is required")
        if self.u0_kind not in ("w0", "zero", "vector"):
            raise ValueError(f"unknown initial-state kind {self.u0_kind!r}")
        if self.u0_kind == "vector" and self.u0_vector is None:
            raise ValueError("u0_kind='vector' requires u0_vector")
