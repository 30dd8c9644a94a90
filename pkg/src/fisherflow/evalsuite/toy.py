"""Synthetic target distributions: random joint tables and the smiley density.

``random_joint`` draws a dense probability table over all K^k outcomes of a
length-k categorical sequence from a flat Dirichlet. ``smiley`` is a fixed
mixture of nine isotropic Gaussian kernels in the 2-simplex's triangle
coordinates (two eyes plus seven clusters along the smile arc); the component
placement below is the reference definition of the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANDOM_JOINT = "random_joint"
SMILEY = "smiley"

_TABLE_CELL_LIMIT = 10_000_000

# Height of the unit-edge equilateral triangle used for 2-D coordinates.
_TRI_HEIGHT = np.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class SmileyComponent:
    """One mixture kernel: mean in triangle coordinates, weight, bandwidth."""

    x: float
    y: float
    weight: float
    bandwidth: float = 0.04


def _smile_arc(n=7, cx=0.5, cy=0.40, radius=0.22, start_deg=190.0, end_deg=350.0, weight=0.75):
    angles = np.deg2rad(np.linspace(start_deg, end_deg, n))
    return tuple(
        SmileyComponent(cx + radius * float(np.cos(a)), cy + radius * float(np.sin(a)), weight / n)
        for a in angles
    )


SMILEY_COMPONENTS: tuple[SmileyComponent, ...] = (
    SmileyComponent(0.35, 0.50, 0.125),  # left eye
    SmileyComponent(0.65, 0.50, 0.125),  # right eye
) + _smile_arc()


@dataclass(frozen=True)
class ToyDistribution:
    """A ground-truth target over (Delta^{K-1})^k, either tabular or smiley."""

    kind: str
    categories: int
    positions: int
    seed: int
    table: np.ndarray | None = None
    components: tuple[SmileyComponent, ...] = ()

    def __post_init__(self):
        if self.kind not in (RANDOM_JOINT, SMILEY):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == RANDOM_JOINT:
            table = np.asarray(self.table, dtype=float)
            if table.ndim != 1 or table.size != self.categories**self.positions:
                raise ValueError("table must be flat over all K^k outcomes")
            if float(table.min()) < 0.0 or abs(float(table.sum()) - 1.0) > 1e-9:
                raise ValueError("table must be a probability vector")
            table = table.copy()
            table.setflags(write=False)
            object.__setattr__(self, "table", table)
        elif not self.components:
            raise ValueError("smiley distribution needs mixture components")

    @property
    def num_cells(self) -> int:
        return self.categories**self.positions


def make_random_joint(categories: int, positions: int, seed: int) -> ToyDistribution:
    """Dense Dirichlet(1) probability table over all K^k joint outcomes."""
    if categories < 2 or positions < 1:
        raise ValueError("need categories >= 2 and positions >= 1")
    cells = categories**positions
    if cells > _TABLE_CELL_LIMIT:
        raise ValueError(f"table with {cells} cells exceeds the {_TABLE_CELL_LIMIT} bound")
    rng = np.random.default_rng(seed)
    table = rng.dirichlet(np.ones(cells))
    return ToyDistribution(
        kind=RANDOM_JOINT, categories=categories, positions=positions, seed=seed, table=table
    )


def make_smiley(seed: int = 0) -> ToyDistribution:
    return ToyDistribution(
        kind=SMILEY, categories=3, positions=1, seed=seed, components=SMILEY_COMPONENTS
    )


def encode_sequences(sequences: np.ndarray, categories: int) -> np.ndarray:
    """Map (n, k) index sequences to flat joint-table cells."""
    sequences = np.asarray(sequences)
    return np.ravel_multi_index(tuple(sequences.T), (categories,) * sequences.shape[1])


def decode_cells(cells: np.ndarray, categories: int, positions: int) -> np.ndarray:
    """Inverse of :func:`encode_sequences`."""
    return np.stack(
        np.unravel_index(np.asarray(cells), (categories,) * positions), axis=1
    ).astype(np.int64)


def triangle_to_barycentric(xy: np.ndarray) -> np.ndarray:
    """Triangle coordinates (unit edge, lower-left origin) -> barycentric weights."""
    xy = np.asarray(xy, dtype=float)
    c = xy[..., 1] / _TRI_HEIGHT
    b = xy[..., 0] - 0.5 * c
    a = 1.0 - b - c
    return np.stack([a, b, c], axis=-1)


def barycentric_to_triangle(p: np.ndarray) -> np.ndarray:
    """Barycentric weights -> 2-D triangle coordinates."""
    p = np.asarray(p, dtype=float)
    x = p[..., 1] + 0.5 * p[..., 2]
    y = _TRI_HEIGHT * p[..., 2]
    return np.stack([x, y], axis=-1)


def sample_smiley_points(n: int, seed: int, components=SMILEY_COMPONENTS) -> np.ndarray:
    """Rejection-sample the smiley mixture onto the simplex.

    Draws a component, adds isotropic Gaussian noise in triangle coordinates,
    and keeps the point only if all barycentric weights are non-negative.
    Returns (n, 3) simplex points.
    """
    rng = np.random.default_rng(seed)
    weights = np.array([c.weight for c in components])
    weights = weights / weights.sum()
    means = np.array([[c.x, c.y] for c in components])
    bandwidths = np.array([c.bandwidth for c in components])
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        todo = max(n - filled, 1024)
        idx = rng.choice(len(components), size=todo, p=weights)
        xy = means[idx] + bandwidths[idx, np.newaxis] * rng.standard_normal((todo, 2))
        bary = triangle_to_barycentric(xy)
        bary = bary[np.all(bary >= 0.0, axis=1)]
        take = min(len(bary), n - filled)
        out[filled : filled + take] = bary[:take]
        filled += take
    return out


def sample_dataset(dist: ToyDistribution, n: int, seed: int) -> np.ndarray:
    """I.i.d. draws from the target.

    Tabular targets yield (n, k) integer index sequences; the smiley yields
    (n, 3) continuous simplex points.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if dist.kind == SMILEY:
        return sample_smiley_points(n, seed, dist.components)
    rng = np.random.default_rng(seed)
    cells = rng.choice(dist.num_cells, size=n, p=dist.table)
    return decode_cells(cells, dist.categories, dist.positions)
