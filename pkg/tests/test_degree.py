import numpy as np
import pytest

from fracpx import BoundaryHit, DegreeProblem, ProblemData, degree, degree_1d, degree_2d
from fracpx.degree import MAP_PRESETS, locate_root, locate_roots, reduced_map, verify_homotopy_invariance
from fracpx.solver import SolverConfig, solve_picard

SQUARE = ((-1.0, 1.0), (-1.0, 1.0))
ONE_NODE_ROOT = (10 / 13) ** 2


def test_identity_and_negation():
    assert degree_1d(lambda x: x, (-1, 1)) == 1
    assert degree_1d(lambda x: -x, (-1, 1)) == -1
    assert degree_2d(MAP_PRESETS["identity"], SQUARE) == 1
    # -I in the plane is a rotation by pi
    assert degree_2d(MAP_PRESETS["neg_identity"], SQUARE) == 1
    assert degree_2d(MAP_PRESETS["conjugate"], SQUARE) == -1


@pytest.mark.parametrize("name,expected", [("zsquared", 2), ("zcubed", 3)])
def test_complex_powers(name, expected):
    res = degree(DegreeProblem(MAP_PRESETS[name], SQUARE))
    assert res.degree == expected
    assert abs(res.winding - expected) < 1e-9


def test_target_outside_image():
    assert degree_2d(MAP_PRESETS["identity"], SQUARE, target=(3.0, 0.0)) == 0
    assert degree_1d(MAP_PRESETS["square"], (-1, 1), target=0.25) == 0


def test_cubic_additivity():
    cubic = MAP_PRESETS["cubic"]
    whole = degree_1d(cubic, (-1, 1))
    parts = [degree_1d(cubic, r) for r in [(-1, -0.25), (-0.25, 0.25), (0.25, 1)]]
    assert parts == [1, -1, 1]
    assert sum(parts) == whole == 1


def test_boundary_hit():
    with pytest.raises(BoundaryHit):
        degree_1d(lambda x: x, (0, 1))
    with pytest.raises(BoundaryHit):
        degree_2d(MAP_PRESETS["identity"], ((0.0, 1.0), (-1.0, 1.0)))


def test_two_dimensional_translation_invariance():
    shifted = lambda x: np.asarray(x) - np.array([0.3, -0.2])
    assert degree_2d(shifted, SQUARE) == 1
    assert degree_2d(shifted, ((0.5, 1.0), (-1.0, 1.0))) == 0


def test_locate_roots():
    roots = locate_roots(MAP_PRESETS["cubic"], ((-1, 1),))
    np.testing.assert_allclose(np.sort(np.ravel(roots)), [-0.5, 0.0, 0.5], atol=1e-10)
    root = locate_root(lambda x: np.asarray(x) - np.array([0.3, -0.2]), SQUARE)
    np.testing.assert_allclose(root, [0.3, -0.2], atol=1e-10)
    assert locate_root(MAP_PRESETS["square"], ((0.5, 1.0),)) is None


def test_reduced_map_vanishes_on_solutions(one_node):
    H = reduced_map(one_node, 1.0)
    from fracpx import apply_L
    v = apply_L(one_node.extend([ONE_NODE_ROOT]), one_node)[one_node.free]
    assert abs(H(v)[0]) < 1e-10
    np.testing.assert_allclose(reduced_map(one_node, 0.0)(np.array([0.7])), [0.7])


def test_homotopy_one_unknown(one_node):
    verdict = verify_homotopy_invariance(one_node)
    assert verdict.all_one and verdict.invariant and verdict.existence
    found = sorted(float(u[one_node.free][0]) for u in verdict.roots_u)
    np.testing.assert_allclose(found, [-ONE_NODE_ROOT, 0.0, ONE_NODE_ROOT], atol=1e-9)


@pytest.mark.slow
def test_homotopy_two_unknowns():
    d = ProblemData.build([[0, 1]], 1 / 4, 0.5, {"kind": "affine", "base": 1.8, "slope": 0.4},
                          {"kind": "constant", "value": 1.4}, 8.0)
    verdict = verify_homotopy_invariance(d)
    assert verdict.all_one
    ref = solve_picard(d, SolverConfig(strategy="picard", tol=1e-12)).u
    assert min(np.max(np.abs(u - ref)) for u in verdict.roots_u) <= 1e-6


def test_homotopy_needs_small_reduction(reference_1d):
    with pytest.raises(ValueError):
        verify_homotopy_invariance(reference_1d)


@pytest.mark.parametrize("name", ["identity", "zsquared", "zcubed", "conjugate"])
def test_boundary_certificate(name):
    res = degree(DegreeProblem(MAP_PRESETS[name], ((-1.0, 1.5), (-0.7, 1.0))))
    assert res.min_distance > 10 * res.modulus


def test_search_budget_exhaustion():
    from fracpx import RefinementLimit
    with pytest.raises(RefinementLimit):
        degree(DegreeProblem(MAP_PRESETS["zsquared"], ((1e-3, 1.0), (-1.0, 1.0)), max_samples=64))
