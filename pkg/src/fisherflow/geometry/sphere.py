"""Closed-form Riemannian primitives on the positive orthant of the unit sphere.

All functions operate on the trailing axis of their array arguments and
broadcast over any leading axes, so a single point of dimension d is a vector
of shape (d+1,), a batch is (B, d+1), and a batch of length-k product points
is (B, k, d+1). Geodesics between orthant points stay inside the orthant
(the orthant is geodesically convex), so the orthant-exit check only fires on
extrapolating steps such as Euler integration of a learned field.
"""

from __future__ import annotations

import numpy as np

from ..errors import OrthantExitError

# Coordinates may dip this far below zero before an operation is considered
# to have left the orthant.
ORTHANT_TOL = 1e-9

# Below this angle the exact limits of sin/angle ratios are used.
_TINY_ANGLE = 1e-7


def _coords(x) -> np.ndarray:
    """Coerce a point-like object (wrapper dataclass or array) to an ndarray."""
    inner = getattr(x, "coords", None)
    if inner is None:
        inner = getattr(x, "components", x)
    return np.asarray(inner, dtype=float)


def check_orthant(y: np.ndarray, *, context: str = "operation") -> np.ndarray:
    """Raise :class:`OrthantExitError` if any coordinate is below -ORTHANT_TOL."""
    worst = float(np.min(y))
    if worst < -ORTHANT_TOL:
        raise OrthantExitError(
            f"{context} left the non-negative orthant (min coordinate {worst:.3e})"
        )
    return y


def distance(x, y) -> np.ndarray:
    """Geodesic (great-circle arc) distance between unit-sphere points.

    For orthant points the inner product is non-negative, so the result lies
    in [0, pi/2]. The inner product is clamped to [-1, 1] before arccos.
    """
    x, y = _coords(x), _coords(y)
    cos_angle = np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)
    return np.arccos(cos_angle)


def exp(x, v, *, check: bool = True) -> np.ndarray:
    """Exponential map: follow the geodesic from ``x`` with initial velocity ``v``.

    ``v`` must be tangent at ``x``. A zero velocity returns ``x`` exactly.
    With ``check`` enabled the result is validated against the orthant
    tolerance; disable it only when the caller handles exits itself (the
    sampler clips and renormalises instead of failing).
    """
    x, v = _coords(x), _coords(v)
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(theta > 0.0, theta, 1.0)
    y = np.cos(theta) * x + np.sin(theta) * (v / safe)
    if check:
        check_orthant(y, context="sphere exp map")
    return y


def log(x, y) -> np.ndarray:
    """Logarithm map: the tangent vector at ``x`` whose exp reaches ``y``.

    Its norm equals ``distance(x, y)`` and it is orthogonal to ``x``.
    Coincident points return the zero vector.
    """
    x, y = _coords(x), _coords(y)
    cos_angle = np.clip(np.sum(x * y, axis=-1, keepdims=True), -1.0, 1.0)
    theta = np.arccos(cos_angle)
    w = y - cos_angle * x
    w_norm = np.linalg.norm(w, axis=-1, keepdims=True)
    # theta / sin(theta) -> 1 as theta -> 0; switch to the limit before the
    # ratio of two vanishing quantities loses precision.
    scale = np.where(theta < _TINY_ANGLE, 1.0, theta / np.where(w_norm > 0.0, w_norm, 1.0))
    return scale * w


def tangent_project(x, w) -> np.ndarray:
    """Orthogonal projection of an ambient vector onto the tangent space at ``x``."""
    x, w = _coords(x), _coords(w)
    return w - np.sum(x * w, axis=-1, keepdims=True) * x


def parallel_transport(x, y, v) -> np.ndarray:
    """Parallel transport of tangent ``v`` along the geodesic from ``x`` to ``y``.

    Uses the closed form v - <v, y>/(1 + <x, y>) (x + y), valid whenever
    x != -y, which always holds on the orthant. Transport preserves norms
    and maps onto the tangent space at ``y``.
    """
    x, y, v = _coords(x), _coords(y), _coords(v)
    denom = 1.0 + np.sum(x * y, axis=-1, keepdims=True)
    coeff = np.sum(v * y, axis=-1, keepdims=True) / denom
    return v - coeff * (x + y)


def interpolate(x0, x1, t) -> np.ndarray:
    """Constant-speed geodesic interpolant exp_{x0}(t log_{x0}(x1)), t in [0, 1]."""
    x0 = _coords(x0)
    t = np.asarray(t, dtype=float)[..., np.newaxis]
    return exp(x0, t * log(x0, x1), check=False)


def target_field(xt, x1, t, *, time_clamp: float = 1e-3) -> np.ndarray:
    """Conditional target velocity log_{x_t}(x1) / (1 - t) toward the endpoint.

    ``t`` is clamped to 1 - time_clamp to keep the target finite near the
    endpoint; along the geodesic interpolant this field equals the
    interpolant's time derivative.
    """
    t = np.minimum(np.asarray(t, dtype=float), 1.0 - time_clamp)
    return log(xt, x1) / (1.0 - t)[..., np.newaxis]


def sample_uniform(dim: int, rng: np.random.Generator, size=()) -> np.ndarray:
    """Sample uniformly (surface measure) from the positive orthant S^dim_+.

    Draws a standard Gaussian in dim+1 coordinates, folds it into the orthant
    by taking absolute values, and normalises; folding a uniform sphere
    direction into the orthant preserves uniformity.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    shape = tuple(np.atleast_1d(size).astype(int)) if not isinstance(size, tuple) else size
    g = np.abs(rng.standard_normal(shape + (dim + 1,)))
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    return g / np.where(norm > 0.0, norm, 1.0)


def nearest_vertex(x) -> np.ndarray:
    """Index of the closest vertex e_i, i.e. argmax of the coordinates.

    Minimising the geodesic distance to a vertex is equivalent to maximising
    the corresponding coordinate. Ties resolve to the lowest index.
    """
    return np.argmax(_coords(x), axis=-1)


def product_distance(x, y) -> np.ndarray:
    """Distance on a k-fold product: sqrt of the sum of squared per-position distances.

    Expects stacked coordinates with shape (..., k, d+1); reduces both the
    coordinate and the position axis.
    """
    d = distance(x, y)
    return np.sqrt(np.sum(d * d, axis=-1))


def product_squared_distance(x, y) -> np.ndarray:
    """Sum over positions of squared per-position geodesic distances."""
    d = distance(x, y)
    return np.sum(d * d, axis=-1)


def renormalize(y: np.ndarray) -> np.ndarray:
    """Scale points back to unit norm (guard against integration drift)."""
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    return y / np.where(norm > 0.0, norm, 1.0)
