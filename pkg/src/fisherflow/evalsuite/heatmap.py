"""Density rasters on the 2-simplex: boundary-corrected KDE and histograms.

Points are mapped to the equilateral triangle with vertices (0,0), (1,0) and
(1/2, sqrt(3)/2); grids are square rasters over the triangle's bounding box
with cells outside the triangle masked to zero. The KDE divides each cell by
the kernel mass that falls inside the triangle, so a flat density stays flat
up to the boundary instead of decaying where the kernel leaks outside.
"""

from __future__ import annotations

import numpy as np

from .toy import _TRI_HEIGHT, barycentric_to_triangle

_POINT_CHUNK = 20_000


def triangle_raster(resolution: int):
    """Cell centers (R, R, 2) over the bounding box and the inside-triangle mask."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    xs = (np.arange(resolution) + 0.5) / resolution
    ys = (np.arange(resolution) + 0.5) / resolution * _TRI_HEIGHT
    grid_x, grid_y = np.meshgrid(xs, ys, indexing="xy")
    centers = np.stack([grid_x, grid_y], axis=-1)
    c = grid_y / _TRI_HEIGHT
    b = grid_x - 0.5 * c
    a = 1.0 - b - c
    inside = (a >= 0.0) & (b >= 0.0) & (c >= 0.0)
    return centers, inside


def density_heatmap(
    points: np.ndarray,
    grid_resolution: int = 64,
    bandwidth: float = 0.05,
    svg_path=None,
    title: str = "",
) -> np.ndarray:
    """Gaussian KDE of simplex points rasterised onto the triangle.

    ``points`` are (n, 3) barycentric coordinates. Returns an (R, R) grid that
    sums to one over the inside-triangle cells; rows follow the y axis bottom
    to top. When ``svg_path`` is given the grid is also rendered (see
    :func:`render_heatmap_svg`).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"expected (n, 3) barycentric points, got shape {points.shape}")
    if points.shape[0] == 0:
        raise ValueError("cannot build a density from an empty point set")
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")

    centers, inside = triangle_raster(grid_resolution)
    cell_xy = centers[inside]
    xy = barycentric_to_triangle(points)

    inv_two_sq = 1.0 / (2.0 * bandwidth * bandwidth)
    density = np.zeros(len(cell_xy))
    for start in range(0, len(xy), _POINT_CHUNK):
        chunk = xy[start : start + _POINT_CHUNK]
        sq = (
            np.sum(cell_xy**2, axis=1)[:, np.newaxis]
            - 2.0 * cell_xy @ chunk.T
            + np.sum(chunk**2, axis=1)[np.newaxis, :]
        )
        density += np.exp(-sq * inv_two_sq).sum(axis=1)

    # boundary correction: kernel mass that stays inside the triangle,
    # approximated on the raster itself
    sq_cells = (
        np.sum(cell_xy**2, axis=1)[:, np.newaxis]
        - 2.0 * cell_xy @ cell_xy.T
        + np.sum(cell_xy**2, axis=1)[np.newaxis, :]
    )
    correction = np.exp(-sq_cells * inv_two_sq).sum(axis=1)
    density /= correction

    grid = np.zeros(inside.shape)
    grid[inside] = density / density.sum()
    if svg_path is not None:
        render_heatmap_svg(grid, svg_path, title=title)
    return grid


def triangle_histogram(points: np.ndarray, bins: int = 64) -> np.ndarray:
    """Normalised 2-D histogram of simplex points on the triangular raster."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"expected (n, 3) barycentric points, got shape {points.shape}")
    xy = barycentric_to_triangle(points)
    ix = np.clip((xy[:, 0] * bins).astype(int), 0, bins - 1)
    iy = np.clip((xy[:, 1] / _TRI_HEIGHT * bins).astype(int), 0, bins - 1)
    grid = np.zeros((bins, bins))
    np.add.at(grid, (iy, ix), 1.0)
    total = grid.sum()
    return grid / total if total > 0 else grid


def render_heatmap_svg(grid: np.ndarray, path, title: str = "") -> None:
    """Standalone SVG triangle plot with a linear colour ramp and colour bar."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    resolution = grid.shape[0]
    _, inside = triangle_raster(resolution)
    masked = np.ma.masked_where(~inside, grid)
    fig, ax = plt.subplots(figsize=(5, 4.6))
    image = ax.imshow(
        masked,
        origin="lower",
        extent=(0.0, 1.0, 0.0, _TRI_HEIGHT),
        cmap="viridis",
        interpolation="nearest",
    )
    ax.plot([0.0, 1.0, 0.5, 0.0], [0.0, 0.0, _TRI_HEIGHT, 0.0], color="black", linewidth=0.8)
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
