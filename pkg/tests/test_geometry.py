"""Tests for the simplex / sphere-orthant geometry kernels and point types."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fisherflow import geometry as geo
from fisherflow.errors import NumericalDomainError, OrthantExitError
from fisherflow.geometry import (
    ProductPoint,
    SimplexPoint,
    SpherePoint,
    TangentVector,
)


def random_interior(rng, dim, size=(), margin=0.05):
    """Random strictly interior simplex points (smoothed Dirichlet draws)."""
    p = rng.dirichlet(np.ones(dim + 1), size=size)
    return geo.smooth(p, margin)


def random_tangent_sphere(rng, x, scale=1.0):
    return scale * geo.tangent_project(x, rng.standard_normal(x.shape))


# --- sphere map and its inverse ---------------------------------------------


def test_sphere_map_vertex_fixed_point():
    assert_allclose(geo.sphere_map([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_sphere_map_elementwise_root():
    assert_allclose(geo.sphere_map([0.25, 0.25, 0.5]), [0.5, 0.5, 1 / np.sqrt(2)])


def test_sphere_map_uniform_symmetry():
    assert_allclose(geo.sphere_map(np.full(3, 1 / 3)), np.full(3, 1 / np.sqrt(3)))


def test_inverse_sphere_map_examples():
    assert_allclose(geo.inverse_sphere_map([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])
    assert_allclose(geo.inverse_sphere_map([0.5, 0.5, 1 / np.sqrt(2)]), [0.25, 0.25, 0.5])


def test_sphere_map_roundtrip_interior():
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(6), size=50)
    assert np.max(np.abs(geo.inverse_sphere_map(geo.sphere_map(p)) - p)) <= 1e-12


# --- smoothing ---------------------------------------------------------------


def test_smooth_one_hot():
    assert_allclose(geo.smooth([1.0, 0.0, 0.0], 0.03), [0.98, 0.01, 0.01])
    assert_allclose(geo.smooth([0.0, 1.0, 0.0], 0.3), [0.1, 0.8, 0.1])


def test_smooth_uniform_fixed_point():
    u = np.full(5, 0.2)
    assert_allclose(geo.smooth(u, 0.17), u)


def test_smooth_floor_and_validation():
    out = geo.smooth(geo.one_hot([0, 2], 3), 0.05)
    assert np.min(out) >= 0.05 / 3 - 1e-15
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            geo.smooth([1.0, 0.0], bad)


# --- distances ----------------------------------------------------------------


def test_sphere_distance_trivials():
    x = geo.sphere_map([0.2, 0.3, 0.5])
    assert geo.sphere_distance(x, x) == 0.0
    assert_allclose(geo.sphere_distance([1, 0, 0], [0, 1, 0]), np.pi / 2)


def test_sphere_distance_derived_value():
    # independent oracle: direct numerical evaluation of arccos(2 sqrt(0.24))
    expected = float(np.arccos(np.sqrt(0.24) + np.sqrt(0.24)))
    got = geo.sphere_distance(geo.sphere_map([0.6, 0.4]), geo.sphere_map([0.4, 0.6]))
    assert_allclose(got, expected, atol=1e-12)
    assert_allclose(got, 0.20136, atol=5e-6)


def test_fisher_rao_distance_values():
    p = [0.25, 0.25, 0.5]
    assert geo.fisher_rao_distance(p, p) == 0.0
    assert_allclose(geo.fisher_rao_distance([1, 0, 0], [0, 1, 0]), np.pi)
    expected = 2 * float(np.arccos(2 * np.sqrt(0.24)))
    assert_allclose(geo.fisher_rao_distance([0.6, 0.4], [0.4, 0.6]), expected, atol=1e-12)
    assert_allclose(expected, 0.40272, atol=1e-5)


# --- Fisher-Rao metric ---------------------------------------------------------


def test_fisher_rao_inner_trivials():
    p = np.full(3, 1 / 3)
    u = np.array([1.0, -1.0, 0.0])
    assert geo.fisher_rao_inner(p, u, np.zeros(3)) == 0.0
    assert_allclose(geo.fisher_rao_inner(p, u, u), 6.0)


def test_fisher_rao_inner_matches_pushforward_oracle():
    # oracle: 4 * Euclidean inner product of d phi(u), d phi(v), element-wise loop
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = random_interior(rng, 4)
        u = rng.standard_normal(5)
        u -= u.mean()
        v = rng.standard_normal(5)
        v -= v.mean()
        oracle = 4.0 * sum(
            (u[i] / (2 * np.sqrt(p[i]))) * (v[i] / (2 * np.sqrt(p[i]))) for i in range(5)
        )
        assert_allclose(geo.fisher_rao_inner(p, u, v), oracle, atol=1e-9)


def test_fisher_rao_inner_boundary_error():
    p = np.array([0.5, 0.5, 0.0])
    with pytest.raises(NumericalDomainError):
        geo.fisher_rao_inner(p, np.zeros(3), np.zeros(3))


# --- sphere exp / log -----------------------------------------------------------


def test_sphere_exp_zero_velocity_exact():
    x = geo.sphere_map([0.2, 0.3, 0.5])
    out = geo.sphere_exp(x, np.zeros(3))
    assert np.array_equal(out, x)


def test_sphere_exp_quarter_circle():
    x = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, np.pi / 2, 0.0])
    assert_allclose(geo.sphere_exp(x, v), [0.0, 1.0, 0.0], atol=1e-15)


def test_sphere_exp_log_roundtrips():
    rng = np.random.default_rng(3)
    for dim in (2, 5, 20):
        p = random_interior(rng, dim, size=(50,))
        q = random_interior(rng, dim, size=(50,))
        x, y = geo.sphere_map(p), geo.sphere_map(q)
        assert np.max(np.abs(geo.sphere_exp(x, geo.sphere_log(x, y)) - y)) <= 1e-9
        v = random_tangent_sphere(rng, x)
        norms = np.linalg.norm(v, axis=-1, keepdims=True)
        v = v / norms * rng.uniform(0.0, 1.0, size=(50, 1))
        z = geo.sphere_exp(x, v, check=False)
        assert np.max(np.abs(geo.sphere_log(x, z) - v)) <= 1e-7


def test_sphere_log_trivials():
    x = geo.sphere_map([0.2, 0.3, 0.5])
    assert_allclose(geo.sphere_log(x, x), np.zeros(3))
    assert_allclose(
        geo.sphere_log([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, np.pi / 2, 0.0], atol=1e-15
    )


def test_sphere_log_norm_and_tangency():
    rng = np.random.default_rng(4)
    x = geo.sphere_map(random_interior(rng, 6, size=(40,)))
    y = geo.sphere_map(random_interior(rng, 6, size=(40,)))
    v = geo.sphere_log(x, y)
    assert np.max(np.abs(np.linalg.norm(v, axis=-1) - geo.sphere_distance(x, y))) <= 1e-9
    assert np.max(np.abs(np.sum(v * x, axis=-1))) <= 1e-9


def test_sphere_exp_orthant_exit_raises():
    x = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 0.75 * np.pi, 0.0])  # past the quarter circle
    with pytest.raises(OrthantExitError):
        geo.sphere_exp(x, v)
    out = geo.sphere_exp(x, v, check=False)
    assert out[0] < 0


# --- simplex exp / log -----------------------------------------------------------


def test_simplex_exp_zero_is_identity():
    p = np.array([0.2, 0.3, 0.5])
    assert np.array_equal(geo.simplex_exp(p, np.zeros(3)), p)


def test_simplex_exp_matches_sphere_chart_oracle():
    # oracle: conjugate the sphere exponential through the square-root map
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        p = random_interior(rng, 3)
        v = rng.standard_normal(4)
        v -= v.mean()
        v *= 0.3
        s = np.sqrt(p)
        w = v / (2 * s)
        oracle = geo.inverse_sphere_map(geo.sphere_exp(s, w, check=False))
        worst = max(worst, float(np.max(np.abs(geo.simplex_exp(p, v, check=False) - oracle))))
    assert worst <= 1e-8


def test_simplex_exp_log_inverse_pair():
    # small v: kept well inside the injectivity radius so exp cannot leave the orthant
    rng = np.random.default_rng(6)
    p = random_interior(rng, 4, size=(30,), margin=0.3)
    v = rng.standard_normal((30, 5))
    v -= v.mean(axis=-1, keepdims=True)
    fr_norm = np.sqrt(geo.fisher_rao_inner(p, v, v))[..., None]
    v = 0.1 * v / fr_norm
    q = geo.simplex_exp(p, v)
    assert np.max(np.abs(geo.simplex_log(p, q) - v)) <= 1e-7


def test_simplex_log_trivials_and_norm():
    p = np.array([0.2, 0.3, 0.5])
    assert_allclose(geo.simplex_log(p, p), np.zeros(3), atol=1e-12)
    rng = np.random.default_rng(7)
    p = random_interior(rng, 5, size=(40,))
    q = random_interior(rng, 5, size=(40,))
    v = geo.simplex_log(p, q)
    assert np.max(np.abs(v.sum(axis=-1))) <= 1e-9
    fr_norm = np.sqrt(geo.fisher_rao_inner(p, v, v))
    assert np.max(np.abs(fr_norm - geo.fisher_rao_distance(p, q))) <= 1e-7


def test_simplex_log_matches_sphere_pullback_oracle():
    rng = np.random.default_rng(8)
    for _ in range(100):
        p = random_interior(rng, 4)
        q = random_interior(rng, 4)
        oracle = 2.0 * np.sqrt(p) * geo.sphere_log(np.sqrt(p), np.sqrt(q))
        assert_allclose(geo.simplex_log(p, q), oracle, atol=1e-7)


# --- parallel transport -----------------------------------------------------------


def test_parallel_transport_identity():
    rng = np.random.default_rng(9)
    x = geo.sphere_map(random_interior(rng, 4))
    v = random_tangent_sphere(rng, x)
    assert_allclose(geo.parallel_transport(x, x, v), v, atol=1e-12)


def test_parallel_transport_preserves_norm_and_tangency():
    rng = np.random.default_rng(10)
    x = geo.sphere_map(random_interior(rng, 6, size=(50,)))
    y = geo.sphere_map(random_interior(rng, 6, size=(50,)))
    v = random_tangent_sphere(rng, x)
    out = geo.parallel_transport(x, y, v)
    assert np.max(np.abs(np.linalg.norm(out, axis=-1) - np.linalg.norm(v, axis=-1))) <= 1e-9
    assert np.max(np.abs(np.sum(out * y, axis=-1))) <= 1e-9


def test_parallel_transport_geodesic_symmetry():
    # transporting log_x(y) from x to y must give -log_y(x)
    rng = np.random.default_rng(11)
    x = geo.sphere_map(random_interior(rng, 5, size=(50,)))
    y = geo.sphere_map(random_interior(rng, 5, size=(50,)))
    moved = geo.parallel_transport(x, y, geo.sphere_log(x, y))
    assert np.max(np.abs(moved + geo.sphere_log(y, x))) <= 1e-8


# --- geodesic interpolant and target field -------------------------------------------


def test_interpolant_endpoints():
    rng = np.random.default_rng(12)
    x0 = geo.sphere_map(random_interior(rng, 4, size=(20,)))
    x1 = geo.sphere_map(random_interior(rng, 4, size=(20,)))
    assert np.max(np.abs(geo.geodesic_interpolant(x0, x1, np.zeros(20)) - x0)) <= 1e-9
    assert np.max(np.abs(geo.geodesic_interpolant(x0, x1, np.ones(20)) - x1)) <= 1e-9


def test_interpolant_midpoint():
    mid = geo.geodesic_interpolant(np.array([1.0, 0, 0]), np.array([0.0, 1, 0]), 0.5)
    assert_allclose(mid, [1 / np.sqrt(2), 1 / np.sqrt(2), 0.0], atol=1e-12)


def test_interpolant_constant_speed_finite_difference():
    # oracle: central difference of the interpolant at h = 1e-5
    rng = np.random.default_rng(13)
    h = 1e-5
    x0 = geo.sphere_map(random_interior(rng, 5, size=(50,)))
    x1 = geo.sphere_map(random_interior(rng, 5, size=(50,)))
    t = rng.uniform(0.1, 0.9, size=50)
    fd = (geo.geodesic_interpolant(x0, x1, t + h) - geo.geodesic_interpolant(x0, x1, t - h)) / (
        2 * h
    )
    assert np.max(np.abs(np.linalg.norm(fd, axis=-1) - geo.sphere_distance(x0, x1))) <= 1e-4


def test_target_field_trivials():
    rng = np.random.default_rng(14)
    x1 = geo.sphere_map(random_interior(rng, 3))
    assert_allclose(geo.target_field(x1, x1, 0.4), np.zeros(4))
    x0 = geo.sphere_map(random_interior(rng, 3))
    v = geo.target_field(x0, x1, 0.0)
    assert_allclose(v, geo.sphere_log(x0, x1))
    assert_allclose(np.linalg.norm(v), geo.sphere_distance(x0, x1))


def test_target_field_clamps_near_one():
    rng = np.random.default_rng(15)
    x0 = geo.sphere_map(random_interior(rng, 3))
    x1 = geo.sphere_map(random_interior(rng, 3))
    clamped = geo.target_field(x0, x1, 1.0)
    explicit = geo.sphere_log(x0, x1) / 1e-3
    assert_allclose(clamped, explicit)


def test_target_field_matches_interpolant_derivative():
    # oracle: central finite difference of the interpolant in t
    rng = np.random.default_rng(16)
    h = 1e-5
    x0 = geo.sphere_map(random_interior(rng, 4, size=(100,)))
    x1 = geo.sphere_map(random_interior(rng, 4, size=(100,)))
    t = rng.uniform(0.05, 0.9, size=100)
    xt = geo.geodesic_interpolant(x0, x1, t)
    fd = (geo.geodesic_interpolant(x0, x1, t + h) - geo.geodesic_interpolant(x0, x1, t - h)) / (
        2 * h
    )
    assert np.max(np.abs(geo.target_field(xt, x1, t) - fd)) <= 1e-4


# --- tangent projection -----------------------------------------------------------


def test_tangent_project_examples():
    x = np.array([1.0, 0.0, 0.0])
    assert_allclose(geo.tangent_project(x, [3.0, 1.0, 2.0]), [0.0, 1.0, 2.0])
    assert_allclose(geo.tangent_project(x, x), np.zeros(3))


def test_tangent_project_idempotent_orthogonal():
    rng = np.random.default_rng(17)
    x = geo.sphere_map(random_interior(rng, 7, size=(50,)))
    w = rng.standard_normal((50, 8))
    pw = geo.tangent_project(x, w)
    assert np.max(np.abs(np.sum(pw * x, axis=-1))) <= 1e-9
    assert np.max(np.abs(geo.tangent_project(x, pw) - pw)) <= 1e-12


# --- uniform prior -----------------------------------------------------------------


def test_uniform_prior_invariants():
    rng = np.random.default_rng(18)
    x = geo.sample_uniform_prior(4, rng, size=(1000,))
    assert np.min(x) >= 0.0
    assert_allclose(np.linalg.norm(x, axis=-1), 1.0, atol=1e-12)


def test_uniform_prior_coordinate_symmetry():
    rng = np.random.default_rng(19)
    n = 100_000
    x = geo.sample_uniform_prior(2, rng, size=(n,))
    means = x.mean(axis=0)
    overall = means.mean()
    # per-coordinate standard error of the mean
    se = x.std(axis=0).max() / np.sqrt(n)
    assert np.max(np.abs(means - overall)) <= 3 * se


def test_uniform_prior_matches_rejection_oracle():
    # oracle: uniform sphere directions, rejected unless inside the orthant,
    # pushed to the simplex; compare first-coordinate marginal histograms
    rng = np.random.default_rng(20)
    n = 100_000
    ours = geo.inverse_sphere_map(geo.sample_uniform_prior(2, rng, size=(n,)))[:, 0]

    oracle_rng = np.random.default_rng(21)
    kept = []
    while sum(len(c) for c in kept) < n:
        g = oracle_rng.standard_normal((4 * n, 3))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        kept.append(g[np.all(g >= 0.0, axis=-1)])
    oracle = np.concatenate(kept)[:n] ** 2
    bins = np.linspace(0.0, 1.0, 21)
    h_ours, _ = np.histogram(ours, bins=bins, density=False)
    h_oracle, _ = np.histogram(oracle[:, 0], bins=bins, density=False)
    tv = 0.5 * np.abs(h_ours / n - h_oracle / n).sum()
    assert tv <= 0.02


# --- decoding ----------------------------------------------------------------------


def test_nearest_vertex():
    assert geo.nearest_vertex([0.1, 0.99, 0.05]) == 1
    assert geo.nearest_vertex(np.eye(4)[2]) == 2
    assert geo.nearest_vertex([1 / np.sqrt(2), 1 / np.sqrt(2), 0.0]) == 0  # tie-break: lowest index


# --- product manifold ----------------------------------------------------------------


def test_product_distance_matches_loop_oracle():
    rng = np.random.default_rng(22)
    x = geo.sphere_map(random_interior(rng, 3, size=(10, 4)))
    y = geo.sphere_map(random_interior(rng, 3, size=(10, 4)))
    looped = np.array(
        [
            np.sqrt(sum(float(geo.sphere_distance(x[i, j], y[i, j])) ** 2 for j in range(4)))
            for i in range(10)
        ]
    )
    assert_allclose(geo.product_distance(x, y), looped, atol=1e-10)


def test_positionwise_lifts_broadcast():
    rng = np.random.default_rng(23)
    x0 = geo.sphere_map(random_interior(rng, 3, size=(5, 4)))
    x1 = geo.sphere_map(random_interior(rng, 3, size=(5, 4)))
    t = rng.uniform(size=(5, 1))  # one t per product point, broadcast over positions
    xt = geo.geodesic_interpolant(x0, x1, np.broadcast_to(t, (5, 4)))
    for i in range(5):
        for j in range(4):
            single = geo.geodesic_interpolant(x0[i, j], x1[i, j], t[i, 0])
            assert_allclose(xt[i, j], single, atol=1e-12)


# --- isometry invariant -----------------------------------------------------------------


def test_isometry_metric_identity():
    rng = np.random.default_rng(24)
    for _ in range(200):
        p = random_interior(rng, 4)
        u = rng.standard_normal(5)
        u -= u.mean()
        v = rng.standard_normal(5)
        v -= v.mean()
        pushed_u = u / (2 * np.sqrt(p))
        pushed_v = v / (2 * np.sqrt(p))
        lhs = geo.fisher_rao_inner(p, u, v)
        rhs = 4.0 * np.dot(pushed_u, pushed_v)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_operations_preserve_orthant():
    rng = np.random.default_rng(25)
    data = geo.smooth(geo.one_hot(rng.integers(0, 5, size=200), 5), 0.01)
    x1 = geo.sphere_map(data)
    x0 = geo.sample_uniform_prior(4, rng, size=(200,))
    t = rng.uniform(size=200)
    xt = geo.geodesic_interpolant(x0, x1, t)
    assert np.min(xt) >= -geo.ORTHANT_TOL
    assert np.min(geo.inverse_sphere_map(xt)) >= -geo.ORTHANT_TOL


# --- point types ------------------------------------------------------------------------


def test_simplex_point_validation():
    p = SimplexPoint([0.2, 0.3, 0.5])
    assert p.dim == 2
    assert p.is_interior()
    with pytest.raises(ValueError):
        SimplexPoint([0.5, 0.6])
    with pytest.raises(ValueError):
        SimplexPoint([1.2, -0.2])
    assert not SimplexPoint([1.0, 0.0]).is_interior()


def test_sphere_point_validation():
    s = SpherePoint([1 / np.sqrt(2), 1 / np.sqrt(2), 0.0])
    assert s.dim == 2
    with pytest.raises(ValueError):
        SpherePoint([0.5, 0.5, 0.5])
    rng = np.random.default_rng(26)
    assert SpherePoint.random_uniform(3, rng).dim == 3


def test_point_conversions_and_immutability():
    p = SimplexPoint([0.25, 0.25, 0.5])
    s = p.to_sphere()
    assert_allclose(s.to_simplex().coords, p.coords)
    with pytest.raises(ValueError):
        p.coords[0] = 0.7


def test_tangent_vector_invariants():
    p = SimplexPoint([0.2, 0.3, 0.5])
    TangentVector(p, [0.1, -0.05, -0.05])
    with pytest.raises(ValueError):
        TangentVector(p, [0.1, 0.1, 0.1])
    s = p.to_sphere()
    w = geo.tangent_project(s.coords, np.array([0.3, -0.1, 0.4]))
    tv = TangentVector(s, w)
    assert tv.chart == "sphere"
    with pytest.raises(ValueError):
        TangentVector(s, [0.3, -0.1, 0.4])


def test_tangent_vector_norm_matches_chart_metric():
    p = SimplexPoint([0.2, 0.3, 0.5])
    v = np.array([0.1, -0.05, -0.05])
    assert_allclose(
        TangentVector(p, v).norm(), np.sqrt(geo.fisher_rao_inner(p.coords, v, v))
    )


def test_product_point():
    rng = np.random.default_rng(27)
    coords = geo.sphere_map(random_interior(rng, 3, size=(4,)))
    pp = ProductPoint.from_coords(coords, chart="sphere")
    assert pp.k == 4 and pp.dim == 3 and pp.chart == "sphere"
    assert pp.coords.shape == (4, 4)
    assert pp.decode().shape == (4,)
    with pytest.raises(ValueError):
        ProductPoint(())
    with pytest.raises(ValueError):
        ProductPoint((SimplexPoint([0.5, 0.5]), SimplexPoint([0.2, 0.3, 0.5])))
