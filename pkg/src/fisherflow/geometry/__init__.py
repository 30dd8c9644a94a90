"""Riemannian geometry of the simplex interior, the sphere orthant, and products.

Array-level kernels live in :mod:`.sphere` and :mod:`.simplex`; they broadcast
over leading axes, so product manifolds are handled by stacking positions along
a (k, d+1) block and batches along further leading axes. This module re-exports
the operations under unambiguous names together with the validated point types.
"""

from .points import (
    ProductPoint,
    SimplexPoint,
    SpherePoint,
    TangentVector,
    SIMPLEX_CHART,
    SPHERE_CHART,
)
from . import simplex, sphere
from .simplex import (
    INTERIOR_EPS,
    fisher_rao_distance,
    fisher_rao_inner,
    inverse_sphere_map,
    one_hot,
    pull_back,
    push_forward,
    smooth,
    sphere_map,
)
from .sphere import (
    ORTHANT_TOL,
    nearest_vertex,
    parallel_transport,
    product_distance,
    product_squared_distance,
    tangent_project,
)

simplex_exp = simplex.exp
simplex_log = simplex.log
sphere_exp = sphere.exp
sphere_log = sphere.log
sphere_distance = sphere.distance
geodesic_interpolant = sphere.interpolate
target_field = sphere.target_field
sample_uniform_prior = sphere.sample_uniform

__all__ = [
    "INTERIOR_EPS",
    "ORTHANT_TOL",
    "ProductPoint",
    "SimplexPoint",
    "SpherePoint",
    "TangentVector",
    "SIMPLEX_CHART",
    "SPHERE_CHART",
    "fisher_rao_distance",
    "fisher_rao_inner",
    "geodesic_interpolant",
    "inverse_sphere_map",
    "nearest_vertex",
    "one_hot",
    "parallel_transport",
    "product_distance",
    "product_squared_distance",
    "pull_back",
    "push_forward",
    "sample_uniform_prior",
    "simplex",
    "simplex_exp",
    "simplex_log",
    "smooth",
    "sphere",
    "sphere_distance",
    "sphere_exp",
    "sphere_log",
    "sphere_map",
    "tangent_project",
    "target_field",
]
