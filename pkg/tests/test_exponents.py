import numpy as np
import pytest

from fracpx import ExponentOutOfRange, build_exponents, build_mesh, conjugate
from fracpx.exponents import PRESETS, one_point_preset, two_point_preset

MESH = build_mesh([[0, 1], [0, 1]], 0.2)


def test_constant_field():
    f = build_exponents({"kind": "constant", "value": 3.0}, {"kind": "constant", "value": 1.5}, MESH)
    assert f.p_minus == f.p_plus == 3.0
    np.testing.assert_array_equal(f.q, np.full(MESH.n, 3.0))
    f.validate()


def test_callables_are_symmetrised():
    # deliberately asymmetric input
    f = build_exponents(lambda x, y: 2.0 + 0.5 * x[..., 0], lambda x: 1.2 + 0 * x[..., 0], MESH)
    assert np.array_equal(f.p, f.p.T)
    np.testing.assert_allclose(f.q, 2.0 + 0.5 * MESH.nodes[:, 0])


def test_r_must_stay_below_p_minus():
    with pytest.raises(ExponentOutOfRange, match=r"r\^\+ < p\^-"):
        build_exponents({"kind": "constant", "value": 2.0}, {"kind": "constant", "value": 2.5}, MESH)


@pytest.mark.parametrize("p,r", [(1.0, 1.0), (0.5, 1.1), (2.0, 1.0), (np.inf, 1.5)])
def test_out_of_range(p, r):
    with pytest.raises(ExponentOutOfRange) as info:
        build_exponents({"kind": "constant", "value": p}, {"kind": "constant", "value": r}, MESH)
    assert info.value.where is not None


def test_conjugate():
    f = build_exponents({"kind": "constant", "value": 4.0}, {"kind": "constant", "value": 1.5}, MESH)
    np.testing.assert_allclose(conjugate(f).p_prime, 4.0 / 3.0)


@pytest.mark.parametrize("kind", PRESETS)
def test_two_point_presets_symmetric(kind):
    fn = two_point_preset(kind, MESH, base=2.0, slope=0.5)
    x = MESH.nodes
    p = fn(x[:, None, :], x[None, :, :])
    np.testing.assert_allclose(p, p.T, atol=1e-15)


def test_distance_is_two_point_only():
    with pytest.raises(ValueError):
        one_point_preset("distance")
    with pytest.raises(ValueError):
        two_point_preset("nope")
