"""Validated value types for points and tangent vectors on both charts.

The numerical kernels in :mod:`fisherflow.geometry.sphere` and
:mod:`fisherflow.geometry.simplex` operate on bare arrays for speed; these
dataclasses wrap single points with invariant checks at construction time and
are accepted anywhere a coordinate array is (the kernels unwrap ``.coords`` /
``.components``). Instances are immutable: the wrapped arrays are marked
read-only and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import simplex, sphere

SUM_TOL = 1e-9
NORM_TOL = 1e-9
TANGENT_TOL = 1e-9

SIMPLEX_CHART = "simplex"
SPHERE_CHART = "sphere"


def _freeze(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    if out.ndim != 1:
        raise ValueError(f"expected a single coordinate vector, got shape {out.shape}")
    if out.shape[-1] < 2:
        raise ValueError("points need at least two coordinates (d >= 1)")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SimplexPoint:
    """A categorical distribution as a point of the d-simplex."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _freeze(self.coords))
        total = float(self.coords.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"simplex coordinates must sum to 1, got {total!r}")
        if float(self.coords.min()) < -sphere.ORTHANT_TOL:
            raise ValueError("simplex coordinates must be non-negative")

    @property
    def dim(self) -> int:
        return self.coords.shape[-1] - 1

    def is_interior(self, eps: float = simplex.INTERIOR_EPS) -> bool:
        return float(self.coords.min()) >= eps

    def to_sphere(self) -> "SpherePoint":
        return SpherePoint(simplex.sphere_map(self.coords))

    def smoothed(self, eps: float) -> "SimplexPoint":
        return SimplexPoint(simplex.smooth(self.coords, eps))

    @classmethod
    def uniform(cls, dim: int) -> "SimplexPoint":
        return cls(np.full(dim + 1, 1.0 / (dim + 1)))

    @classmethod
    def vertex(cls, dim: int, index: int) -> "SimplexPoint":
        return cls(simplex.one_hot(index, dim + 1))


@dataclass(frozen=True)
class SpherePoint:
    """A point of the positive orthant of the unit d-sphere."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _freeze(self.coords))
        norm = float(np.linalg.norm(self.coords))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"sphere coordinates must have unit norm, got {norm!r}")
        if float(self.coords.min()) < -sphere.ORTHANT_TOL:
            raise ValueError("sphere coordinates must be non-negative")

    @property
    def dim(self) -> int:
        return self.coords.shape[-1] - 1

    def to_simplex(self) -> SimplexPoint:
        return SimplexPoint(simplex.inverse_sphere_map(self.coords))

    @classmethod
    def random_uniform(cls, dim: int, rng: np.random.Generator) -> "SpherePoint":
        return cls(sphere.sample_uniform(dim, rng))


@dataclass(frozen=True)
class TangentVector:
    """A direction attached to a base point, on either chart.

    Simplex-chart components sum to zero; sphere-chart components are
    orthogonal to the base point.
    """

    base: SimplexPoint | SpherePoint
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _freeze(self.components))
        if self.components.shape != self.base.coords.shape:
            raise ValueError("tangent components must match the base point's shape")
        if self.chart == SIMPLEX_CHART:
            total = float(self.components.sum())
            if abs(total) > TANGENT_TOL:
                raise ValueError(f"simplex tangent components must sum to 0, got {total!r}")
        else:
            inner = float(np.dot(self.base.coords, self.components))
            if abs(inner) > TANGENT_TOL:
                raise ValueError(f"sphere tangent must be orthogonal to its base, got {inner!r}")

    @property
    def chart(self) -> str:
        return SIMPLEX_CHART if isinstance(self.base, SimplexPoint) else SPHERE_CHART

    def norm(self) -> float:
        """Riemannian norm: Fisher-Rao on the simplex chart, Euclidean on the sphere."""
        if self.chart == SIMPLEX_CHART:
            return float(
                np.sqrt(simplex.fisher_rao_inner(self.base.coords, self.components, self.components))
            )
        return float(np.linalg.norm(self.components))


@dataclass(frozen=True)
class ProductPoint:
    """A length-k sequence of same-chart, same-dimension manifold points."""

    positions: tuple = field()

    def __post_init__(self):
        positions = tuple(self.positions)
        if not positions:
            raise ValueError("a product point needs at least one position")
        kinds = {type(p) for p in positions}
        if len(kinds) > 1 or not kinds.issubset({SimplexPoint, SpherePoint}):
            raise ValueError("all positions must be points of the same chart")
        dims = {p.dim for p in positions}
        if len(dims) > 1:
            raise ValueError(f"all positions must share one dimension, got {sorted(dims)}")
        object.__setattr__(self, "positions", positions)

    @property
    def chart(self) -> str:
        return SIMPLEX_CHART if isinstance(self.positions[0], SimplexPoint) else SPHERE_CHART

    @property
    def k(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return self.positions[0].dim

    @property
    def coords(self) -> np.ndarray:
        """Stacked coordinates, shape (k, d+1)."""
        return np.stack([p.coords for p in self.positions])

    @classmethod
    def from_coords(cls, coords, chart: str = SPHERE_CHART) -> "ProductPoint":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2:
            raise ValueError(f"expected (k, d+1) coordinates, got shape {coords.shape}")
        point = SimplexPoint if chart == SIMPLEX_CHART else SpherePoint
        return cls(tuple(point(row) for row in coords))

    def decode(self) -> np.ndarray:
        """Nearest-vertex index per position."""
        return sphere.nearest_vertex(self.coords)
