import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import central_difference, random_framework
from flexsaddle.fixtures import four_bar, heptagon_1, heptagon_1_saddle, triangle
from flexsaddle.framework import (
    Configuration,
    DegenerateConfigurationWarning,
    Framework,
    FrameworkError,
    PinningScheme,
    Topology,
    degenerate_edges,
    edge_gradient,
    edge_hessian,
    edge_residual,
    free_edge_energy,
    n_trivial,
    nontrivial_flex_basis,
    rigid_body_basis,
    rigidity_matrix,
)

pytestmark = pytest.mark.usefixtures("backend")


def _residual_at(fw, i):
    return lambda x: edge_residual(fw.with_coords(x), i) if i != fw.topology.free_edge else \
        free_edge_energy(fw.with_coords(x)) - fw.rest_lengths[i] ** 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_edge_gradient_and_hessian_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    fw = random_framework(rng)
    x = fw.config.coords
    for i in range(fw.m):
        if i == fw.topology.free_edge:
            continue
        f = _residual_at(fw, i)
        g = edge_gradient(fw, i)
        np.testing.assert_allclose(g, central_difference(f, x), rtol=1e-6, atol=1e-7)
        fd_h = central_difference(lambda y: edge_gradient(fw.with_coords(y), i), x)
        np.testing.assert_allclose(edge_hessian(fw.topology, i, fw.dim), fd_h, rtol=1e-6, atol=1e-7)


def test_rigidity_matrix_rows_are_edge_gradients():
    fw = heptagon_1()
    r = rigidity_matrix(fw)
    assert r.shape == (10, 14)
    for i in range(fw.m):
        np.testing.assert_array_equal(r[i], edge_gradient(fw, i))
        a, b = fw.topology.edges[i]
        assert np.count_nonzero(r[i]) <= 2 * fw.dim
        np.testing.assert_allclose(r[i].reshape(-1, 2).sum(axis=0), 0.0, atol=1e-14)


def test_hessian_sum_equals_weighted_laplacian():
    from flexsaddle import kernels

    fw = heptagon_1()
    w = np.random.default_rng(3).normal(size=fw.m)
    direct = sum(wi * edge_hessian(fw.topology, i, 2) for i, wi in enumerate(w))
    np.testing.assert_allclose(kernels.laplacian_hessian(fw.topology.edge_array, w, fw.n, 2), direct, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rigid_motions_lie_in_kernel(seed):
    rng = np.random.default_rng(seed)
    fw = random_framework(rng)
    t = rigid_body_basis(fw.config)
    assert t.shape == (fw.n_coords, n_trivial(fw.dim))
    np.testing.assert_allclose(t.T @ t, np.eye(t.shape[1]), atol=1e-12)
    np.testing.assert_allclose(rigidity_matrix(fw) @ t, 0.0, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flex_basis_dimension_count(seed):
    # nd = rank + trivial + nontrivial flexes for generic points
    rng = np.random.default_rng(seed)
    fw = random_framework(rng)
    v = nontrivial_flex_basis(fw)
    rank = np.linalg.matrix_rank(rigidity_matrix(fw))
    assert v.shape[1] == fw.n_coords - rank - n_trivial(fw.dim)
    np.testing.assert_allclose(rigidity_matrix(fw) @ v, 0.0, atol=1e-9)
    np.testing.assert_allclose(rigid_body_basis(fw.config).T @ v, 0.0, atol=1e-9)


def test_known_flex_dimensions():
    assert nontrivial_flex_basis(triangle()).shape[1] == 0
    assert nontrivial_flex_basis(four_bar()).shape[1] == 1
    assert nontrivial_flex_basis(four_bar(0.0, 0.0)).shape[1] == 2
    assert nontrivial_flex_basis(heptagon_1()).shape[1] == 1
    assert nontrivial_flex_basis(heptagon_1_saddle()).shape[1] == 2


def test_collinear_points_in_3d_warn():
    cfg = Configuration.from_points([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
    with pytest.warns(DegenerateConfigurationWarning):
        t = rigid_body_basis(cfg)
    assert t.shape[1] == 5


def test_configuration_is_immutable():
    fw = four_bar()
    with pytest.raises(ValueError):
        fw.config.coords[0] = 1.0
    again = fw.with_coords(fw.config.coords.copy())
    assert again == fw.with_coords(fw.config.coords)
    assert again.rest_lengths[0] == pytest.approx(np.linalg.norm(fw.config.points[2] - fw.config.points[3]))


@pytest.mark.parametrize(
    "edges, message",
    [([(0, 0)], "loop"), ([(0, 5)], "missing vertex"), ([(0, 1), (1, 0)], "duplicate")],
)
def test_topology_validation(edges, message):
    with pytest.raises(FrameworkError, match=message):
        Topology(3, tuple(edges))


def test_framework_validation():
    pts = [(0, 0), (1, 0), (0, 1)]
    with pytest.raises(FrameworkError):
        Framework.from_points(pts, [(0, 1), (1, 2)], rest_lengths=[1.0, 0.0])
    with pytest.raises(FrameworkError, match="pins"):
        Framework.from_points(pts, [(0, 1), (1, 2)], pins=[(0, 0)])
    with pytest.raises(FrameworkError, match="disagrees"):
        Framework.from_points(pts, [(0, 1), (1, 2)], pins=[(0, 0, 5.0), (0, 1, 0.0), (1, 1, 0.0)])
    with pytest.raises(FrameworkError, match="duplicate"):
        PinningScheme(((0, 0, 0.0), (0, 0, 0.0), (1, 1, 0.0))).validate(2, 3)
    with pytest.raises(IndexError):
        edge_residual(triangle(), 7)


def test_residuals_and_energy():
    fw = four_bar(0.0, 0.0)
    assert free_edge_energy(fw) == pytest.approx(1.0)
    for i in range(1, 4):
        assert abs(edge_residual(fw, i)) < 1e-14
    assert degenerate_edges(fw) == []
    coincident = fw.with_coords([0, 0, 1, 0, 2, 0, 2, 0])
    assert degenerate_edges(coincident) == [0]


def test_maxwell_flag():
    assert four_bar().is_under_constrained
    assert not triangle().is_under_constrained
    assert heptagon_1().is_under_constrained
