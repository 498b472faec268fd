import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracpx import (
    BracketFailure,
    ProblemData,
    build_mesh,
    check_prop1,
    check_prop2,
    gagliardo_norm,
    lebesgue_norm,
    luxemburg,
    modular_gagliardo,
    modular_lebesgue,
)

# Continuum Luxemburg norms, from adaptive quadrature and root finding:
#   u = 1 on (0, 2), p(x) = 2 + x
#   u = 1 + x on (0, 1), p(x) = 2 + x
ONE_ON_0_2 = 1.2637554477710924
AFFINE_ON_0_1 = 1.5720306675895042


def _discrete(u_fn, length, n):
    mesh = build_mesh([[0, length]], length / n)
    x = mesh.nodes[:, 0]
    return lebesgue_norm(u_fn(x), 2.0 + x, mesh, tol=1e-14)


def test_quadrature_oracles_match_reference():
    quad = pytest.importorskip("scipy.integrate").quad
    brentq = pytest.importorskip("scipy.optimize").brentq
    lam = brentq(lambda l: quad(lambda x: l ** -(2 + x), 0, 2)[0] - 1, 1, 2, xtol=1e-15)
    assert lam == pytest.approx(ONE_ON_0_2, rel=1e-12)
    lam = brentq(lambda l: quad(lambda x: ((1 + x) / l) ** (2 + x), 0, 1)[0] - 1, 1, 2, xtol=1e-15)
    assert lam == pytest.approx(AFFINE_ON_0_1, rel=1e-12)


@pytest.mark.parametrize("u_fn,length,exact", [
    (np.ones_like, 2.0, ONE_ON_0_2),
    (lambda x: 1 + x, 1.0, AFFINE_ON_0_1),
])
def test_midpoint_norm_converges_second_order(u_fn, length, exact):
    errs = [abs(_discrete(u_fn, length, n) - exact) for n in (64, 128, 256, 512)]
    assert errs[-1] / exact < 1e-6
    for a, b in zip(errs, errs[1:]):
        assert 3.5 < a / b < 4.5


def test_constant_closed_form():
    mesh = build_mesh([[0, 3]], 3 / 40)
    for c, p in [(2.0, 1.5), (-0.01, 4.0), (50.0, 2.0)]:
        got = lebesgue_norm(np.full(mesh.n, c), p, mesh, tol=1e-13)
        assert got == pytest.approx(abs(c) * 3 ** (1 / p), rel=1e-12)


def test_unit_volume_constant_is_exponent_free():
    mesh = build_mesh([[0, 1]], 1 / 10)
    q = np.linspace(1.2, 5, mesh.n)
    assert lebesgue_norm(np.full(mesh.n, 0.3), q, mesh) == pytest.approx(0.3, rel=1e-10)


def test_zero_and_bracketing():
    mesh = build_mesh([[0, 1]], 0.25)
    assert luxemburg(lambda f: modular_lebesgue(f, 2.0, mesh), np.zeros(4)).luxemburg == 0.0
    for scale in (1e-8, 1e8):
        rep = luxemburg(lambda f: modular_lebesgue(f, 2.0, mesh), np.full(4, scale))
        assert rep.bracket_low <= rep.luxemburg <= rep.bracket_high
        assert rep.modular == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(BracketFailure):
        luxemburg(lambda f: np.inf, np.ones(4))
    with pytest.raises(ValueError):
        luxemburg(lambda f: 1.0, np.ones(4), tol=0)


def test_two_node_gagliardo():
    d = ProblemData.build([[0, 1]], 0.5, 0.5, {"kind": "constant", "value": 2.0},
                          {"kind": "constant", "value": 1.5}, 1.0)
    u = np.array([1.0, 0.0])
    assert modular_gagliardo(u, d.kernel, d.field) == pytest.approx(2.0)
    assert gagliardo_norm(u, d.kernel, d.field) == pytest.approx(np.sqrt(2.0), rel=1e-10)


MESH = build_mesh([[0, 1]], 1 / 24)
Q = 1.3 + 2.5 * MESH.nodes[:, 0]
VAR = ProblemData.build([[0, 1]], 1 / 16, 0.4, {"kind": "oscillatory", "base": 2.0, "amplitude": 0.7},
                        {"kind": "constant", "value": 1.1}, 1.0)

values = arrays(np.float64, MESH.n, elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(values)
def test_prop1_relations(u):
    if not np.any(np.abs(u) > 1e-100):
        return
    verdict = check_prop1(u, Q, MESH)
    assert verdict.passed, verdict.slacks


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, VAR.mesh.n, elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_prop2_relations(u):
    u = np.where(VAR.free, u, 0.0)
    if not np.any(np.abs(u) > 1e-100):
        return
    verdict = check_prop2(u, VAR.kernel, VAR.field)
    assert verdict.passed, verdict.slacks


@settings(max_examples=40, deadline=None)
@given(values, st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity(u, c):
    if not np.any(np.abs(u) > 1e-6):
        return
    assert lebesgue_norm(c * u, Q, MESH) == pytest.approx(abs(c) * lebesgue_norm(u, Q, MESH), rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(values, values)
def test_triangle(u, v):
    nu, nv = lebesgue_norm(u, Q, MESH), lebesgue_norm(v, Q, MESH)
    assert lebesgue_norm(u + v, Q, MESH) <= (nu + nv) * (1 + 1e-9) + 1e-300
