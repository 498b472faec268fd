import numpy as np
import pytest

from fracpx import Box, EmptyMesh, InvalidOrder, build_exponents, build_kernel, build_mesh
from fracpx.mesh import pairwise_distances

P2 = {"kind": "constant", "value": 2.0}
R15 = {"kind": "constant", "value": 1.5}


def test_weights_sum_to_volume():
    for box, h in [([[0, 1]], 0.1), ([[0, 2], [-1, 0.5]], 0.3), ([[0, 1], [0, 1]], 1 / 7)]:
        mesh = build_mesh(box, h)
        assert mesh.weights.sum() == pytest.approx(Box.from_extents(box).volume, rel=1e-14)


def test_cell_centres_1d():
    mesh = build_mesh([[0, 1]], 0.25)
    assert mesh.shape == (4,)
    np.testing.assert_allclose(mesh.nodes[:, 0], [0.125, 0.375, 0.625, 0.875])


def test_interior_excludes_outer_ring():
    mesh = build_mesh([[0, 1], [0, 1]], 0.25)
    assert mesh.interior.sum() == 4
    inner = mesh.nodes[mesh.interior]
    assert np.all((inner > 0.25) & (inner < 0.75))


def test_reflection_is_involution():
    mesh = build_mesh([[0, 1], [0, 2]], 0.3)
    perm = mesh.reflect_permutation()
    np.testing.assert_array_equal(perm[perm], np.arange(mesh.n))
    np.testing.assert_allclose(mesh.nodes[perm], 2 * mesh.box.center - mesh.nodes, atol=1e-12)


def test_two_node_kernel():
    mesh = build_mesh([[0, 1]], 0.5)
    field = build_exponents(P2, R15, mesh)
    k = build_kernel(mesh, 0.5, field)
    # w = 1/2, |x - y| = 1/2, N + s p = 2
    np.testing.assert_allclose(k.K, [[0.0, 1.0], [1.0, 0.0]])


def test_kernel_symmetric_positive(rng):
    mesh = build_mesh([[0, 1], [0, 1]], 0.2)
    field = build_exponents({"kind": "affine", "base": 1.5, "slope": 1.0}, R15 | {"value": 1.2}, mesh)
    K = build_kernel(mesh, 0.3, field).K
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 0)
    off = ~np.eye(mesh.n, dtype=bool)
    assert np.all(K[off] > 0)


def test_distances():
    mesh = build_mesh([[0, 1], [0, 1]], 0.5)
    D = pairwise_distances(mesh)
    assert D[0, 3] == pytest.approx(np.sqrt(0.5))


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_invalid_order(s):
    mesh = build_mesh([[0, 1]], 0.25)
    with pytest.raises(InvalidOrder):
        build_kernel(mesh, s, build_exponents(P2, R15, mesh))


def test_bad_meshes():
    with pytest.raises(EmptyMesh):
        build_mesh([[1, 1]], 0.1)
    with pytest.raises(ValueError):
        build_mesh([[0, 1]], 0.0)
    with pytest.raises(ValueError):
        build_mesh([[0, 1]] * 3, 0.5)


def test_kernel_decreases_with_distance():
    mesh = build_mesh([[0, 1]], 1 / 12)
    K = build_kernel(mesh, 0.4, build_exponents({"kind": "constant", "value": 3.0}, R15, mesh)).K
    row = K[0, 1:]
    assert np.all(np.diff(row) < 0)
