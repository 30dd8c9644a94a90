"""Fisher-Rao geometry of the probability simplex interior.

The square-root map phi(p) = sqrt(p) identifies the simplex interior, with the
Fisher-Rao metric, with the positive orthant of the unit sphere; 2*phi is an
isometry, so Fisher-Rao distances are twice the corresponding unit-sphere arc
lengths. Everything here therefore has two routes: a direct closed form in
simplex coordinates, and conjugation through the sphere chart. The direct
forms are implemented below; the sphere-chart route serves as an independent
cross-check in the test suite.

As with :mod:`fisherflow.geometry.sphere`, all functions act on the trailing
axis and broadcast over leading axes.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalDomainError
from . import sphere
from .sphere import _coords, check_orthant

# Coordinates at or below this threshold count as boundary points for the
# metric (division by p is no longer trustworthy).
INTERIOR_EPS = 1e-12


def sphere_map(p) -> np.ndarray:
    """Element-wise square root: simplex interior -> positive sphere orthant."""
    p = _coords(p)
    return np.sqrt(np.maximum(p, 0.0))


def inverse_sphere_map(s) -> np.ndarray:
    """Element-wise square: positive sphere orthant -> simplex."""
    s = _coords(s)
    return s * s


def smooth(p, eps: float) -> np.ndarray:
    """Convex combination (1-eps) p + eps * uniform, moving p strictly inside.

    This is the label-smoothing step applied to one-hot data before any
    metric quantity is evaluated; afterwards every coordinate is at least
    eps/(d+1).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"smoothing eps must lie in (0, 1), got {eps}")
    p = _coords(p)
    k = p.shape[-1]
    return (1.0 - eps) * p + eps / k


def one_hot(indices, num_classes: int) -> np.ndarray:
    """Vertex encoding of integer categories; appends the coordinate axis."""
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= num_classes):
        raise ValueError("category index out of range")
    return np.identity(num_classes)[indices]


def fisher_rao_distance(p, q) -> np.ndarray:
    """Geodesic distance 2 arccos(<sqrt(p), sqrt(q)>) under the Fisher-Rao metric."""
    return 2.0 * sphere.distance(sphere_map(p), sphere_map(q))


def fisher_rao_inner(p, u, v) -> np.ndarray:
    """Fisher-Rao inner product sum_i u^i v^i / p^i at an interior point.

    Raises :class:`NumericalDomainError` when any coordinate of ``p`` is at or
    below the interior threshold; callers must smooth boundary points first.
    """
    p, u, v = _coords(p), _coords(u), _coords(v)
    if np.min(p) < INTERIOR_EPS:
        raise NumericalDomainError(
            "Fisher-Rao metric evaluated at a boundary point "
            f"(min coordinate {float(np.min(p)):.3e}); smooth the input first"
        )
    return np.sum(u * v / p, axis=-1)


def push_forward(p, v) -> np.ndarray:
    """Differential of the square-root map: d phi(v)^i = v^i / (2 sqrt(p^i))."""
    return _coords(v) / (2.0 * sphere_map(p))


def pull_back(p, w) -> np.ndarray:
    """Inverse differential of the square-root map: v^i = 2 sqrt(p^i) w^i."""
    return 2.0 * sphere_map(p) * _coords(w)


def exp(p, v, *, check: bool = True) -> np.ndarray:
    """Exponential map on the simplex interior under the Fisher-Rao metric.

    Direct closed form in simplex coordinates; with v_p := v / sqrt(p) and
    n := ||v_p||,

        exp_p(v) = 1/2 (p + v_p^2 / n^2)
                 + 1/2 (p - v_p^2 / n^2) cos(n)
                 + sin(n) / n * v,

    squares and quotients element-wise. It agrees with conjugating the
    sphere-chart exponential through the square-root map.
    """
    p, v = _coords(p), _coords(v)
    vp = v / sphere_map(p)
    n = np.linalg.norm(vp, axis=-1, keepdims=True)
    safe = np.where(n > 0.0, n, 1.0)
    unit_sq = (vp / safe) ** 2
    q = (
        0.5 * (p + unit_sq)
        + 0.5 * (p - unit_sq) * np.cos(n)
        + (np.sin(n) / safe) * v
    )
    q = np.where(n > 0.0, q, p)
    if check:
        check_orthant(q, context="simplex exp map")
    return q


def log(p, q) -> np.ndarray:
    """Logarithm map on the simplex interior under the Fisher-Rao metric.

    With s := <sqrt(p), sqrt(q)> (the Bhattacharyya coefficient),

        log_p(q) = d_FR(p, q) / sqrt(1 - s^2) * (sqrt(p q) - s p).

    The denominator carries s squared: that is what conjugating the
    sphere-chart logarithm through the square-root map yields, and the test
    suite pins the formula against that route. Components sum to zero and
    the Fisher-Rao norm of the result equals d_FR(p, q). Coincident points
    return the zero vector.
    """
    p, q = _coords(p), _coords(q)
    root_pq = sphere_map(p) * sphere_map(q)
    s = np.clip(np.sum(root_pq, axis=-1, keepdims=True), -1.0, 1.0)
    dist = 2.0 * np.arccos(s)
    denom = np.sqrt(np.maximum(1.0 - s * s, 0.0))
    # dist / denom -> 2 as q -> p.
    scale = np.where(denom < 1e-12, 2.0, dist / np.where(denom > 0.0, denom, 1.0))
    return scale * (root_pq - s * p)
