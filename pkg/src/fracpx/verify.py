"""Randomised property suites behind the ``verify`` subcommand.

Each suite returns a verdict ``{"property", "samples", "worstSlack", "pass"}``
where a nonnegative ``worstSlack`` means every sample satisfied the
relation at the suite's tolerance.
"""

from __future__ import annotations

import numpy as np

from .exponents import build_exponents
from .mesh import build_mesh
from .modular import (
    check_prop1,
    check_prop2,
    gagliardo_norm,
    lebesgue_norm,
    luxemburg,
    modular_gagliardo,
    modular_lebesgue,
)
from .operators import (
    ProblemData,
    apply_L,
    apply_S,
    apply_T,
    energy,
    energy_gradient,
    s_image_bounds,
)

__all__ = ["PRESET_FIELDS", "random_function", "run_verification"]

PRESET_FIELDS = {
    "constant": ({"kind": "constant", "value": 2.5}, {"kind": "constant", "value": 1.5}),
    "affine": ({"kind": "affine", "base": 1.6, "slope": 1.2}, {"kind": "constant", "value": 1.3}),
    "radial": ({"kind": "radial", "base": 1.8, "slope": 1.5}, {"kind": "radial", "base": 1.2, "slope": 0.3}),
    "distance": ({"kind": "distance", "base": 2.0, "slope": 1.0}, {"kind": "constant", "value": 1.2}),
    "oscillatory": ({"kind": "oscillatory", "base": 2.2, "amplitude": 0.6, "frequency": 2.0},
                    {"kind": "oscillatory", "base": 1.3, "amplitude": 0.1, "frequency": 1.0}),
}


def random_function(rng, n: int, mask=None) -> np.ndarray:
    """Uniform values with a log-uniform overall scale in [1e-2, 1e2]."""
    scale = 10.0 ** rng.uniform(-2.0, 2.0)
    u = scale * rng.uniform(-1.0, 1.0, n)
    if mask is not None:
        u = np.where(mask, u, 0.0)
    return u


def _verdict(name: str, slacks) -> dict:
    slacks = list(slacks)
    worst = float(min(slacks)) if slacks else float("inf")
    return {"property": name, "samples": len(slacks), "worstSlack": worst, "pass": bool(worst >= 0.0)}


def _problem(preset: str, dim: int, h: float, s: float, lam: float = 1.0) -> ProblemData:
    p_expr, r_expr = PRESET_FIELDS[preset]
    box = [[0.0, 1.0]] * dim
    return ProblemData.build(box, h, s, p_expr, r_expr, lam)


def luxemburg_suite(rng, samples: int, n: int = 512, tol: float = 1e-9) -> list[dict]:
    mesh = build_mesh([[0.0, 1.0]], 1.0 / n)
    unit, closed = [], []
    per = max(1, samples // len(PRESET_FIELDS))
    for preset, (p_expr, r_expr) in PRESET_FIELDS.items():
        q = build_exponents(p_expr, r_expr, mesh).q
        for _ in range(per):
            u = random_function(rng, mesh.n)
            rep = luxemburg(lambda f: modular_lebesgue(f, q, mesh), u)
            unit.append(tol - abs(modular_lebesgue(u / rep.luxemburg, q, mesh) - 1.0))
    wide = build_mesh([[0.0, 2.0]], 2.0 / n)
    for _ in range(per):
        c = rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-2, 2)
        p = rng.uniform(1.1, 6.0)
        exact = abs(c) * 2.0 ** (1.0 / p)
        got = lebesgue_norm(np.full(wide.n, c), p, wide)
        closed.append(tol - abs(got - exact) / exact)
    return [_verdict("luxemburg_unit_ball", unit), _verdict("luxemburg_constant_closed_form", closed)]


def modular_suite(rng, samples: int, n: int = 32, tol: float = 1e-12) -> list[dict]:
    mesh = build_mesh([[0.0, 1.0]], 1.0 / n)
    p1, p2 = [], []
    per = max(1, samples // len(PRESET_FIELDS))
    for preset in PRESET_FIELDS:
        data = _problem(preset, 1, 1.0 / n, 0.5)
        for _ in range(per):
            u = random_function(rng, mesh.n)
            v1 = check_prop1(u, data.field.q, data.mesh)
            p1.append(v1.worst_slack + tol)
            w = random_function(rng, mesh.n, data.free)
            v2 = check_prop2(w, data.kernel, data.field)
            p2.append(v2.worst_slack + tol)
    return [_verdict("prop1_modular_norm_relations", p1), _verdict("prop2_gagliardo_relations", p2)]


def norm_axioms_suite(rng, samples: int, n: int = 32) -> list[dict]:
    data = _problem("affine", 1, 1.0 / n, 0.5)
    q = data.field.q
    homog, tri = [], []
    for _ in range(samples):
        u = random_function(rng, data.mesh.n, data.free)
        v = random_function(rng, data.mesh.n, data.free)
        c = rng.normal() * 10.0 ** rng.uniform(-1, 1)
        for nfn in (lambda f: lebesgue_norm(f, q, data.mesh),
                    lambda f: gagliardo_norm(f, data.kernel, data.field)):
            nu = nfn(u)
            homog.append(1e-8 - abs(nfn(c * u) - abs(c) * nu) / max(abs(c) * nu, 1e-300))
            tri.append(nfn(u) + nfn(v) - nfn(u + v) + 1e-9 * (nfn(u) + nfn(v)))
    return [_verdict("luxemburg_homogeneity", homog), _verdict("luxemburg_triangle", tri)]


def operator_suite(rng, samples: int, n: int = 32) -> list[dict]:
    dual, mono, grad, odd = [], [], [], []
    presets = list(PRESET_FIELDS)
    for k in range(samples):
        data = _problem(presets[k % len(presets)], 1, 1.0 / n, 0.5, lam=rng.uniform(-2, 10))
        u = random_function(rng, data.mesh.n, data.free)
        v = random_function(rng, data.mesh.n, data.free)
        rho = modular_gagliardo(u, data.kernel, data.field)
        lu = float(np.dot(apply_L(u, data), u))
        dual.append(1e-12 - abs(lu - rho) / max(rho, 1e-300))
        if np.max(np.abs(u - v)) > 1e-8:
            mono.append(float(np.dot(apply_L(u, data) - apply_L(v, data), u - v)))
        odd.append(-max(np.max(np.abs(apply_L(-u, data) + apply_L(u, data))),
                        np.max(np.abs(apply_S(-u, data) + apply_S(u, data)))))
        if k < max(1, samples // 10):
            grad.append(1e-5 - _fd_gradient_error(u / max(1.0, np.max(np.abs(u))), data))
    return [
        _verdict("duality_identity", dual),
        _verdict("strict_monotonicity", mono),
        _verdict("energy_gradient_fd", grad),
        _verdict("odd_symmetry", odd),
    ]


def _fd_gradient_error(u, data: ProblemData, step: float = 1e-6) -> float:
    g = energy_gradient(u, data)
    fd = np.empty_like(g)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = step
        fd[i] = (energy(u + e, data) - energy(u - e, data)) / (2 * step)
    return float(np.max(np.abs(fd - g)) / max(np.max(np.abs(g)), 1e-300))


def inverse_suite(rng, samples: int, n: int = 32) -> list[dict]:
    slack = []
    data = _problem("affine", 1, 1.0 / n, 0.5)
    for _ in range(samples):
        u0 = rng.uniform(-1.0, 1.0, data.mesh.n) * data.free
        u = apply_T(apply_L(u0, data), data, 1e-12)
        slack.append(1e-6 - float(np.max(np.abs(u - u0))))
    return [_verdict("inverse_round_trip", slack)]


def s_bound_suite(rng, samples: int, n: int = 16) -> list[dict]:
    data = _problem("affine", 1, 1.0 / n, 0.5, lam=5.0)
    slack = []
    for _ in range(samples):
        u = random_function(rng, data.mesh.n, data.free)
        M = gagliardo_norm(u, data.kernel, data.field)
        out = s_image_bounds(u, data, w0_bound=M)
        slack.append(min(out["phi_bound"] - out["phi_norm"], out["psi_bound"] - out["psi_norm"],
                         out["phi_poly_bound"] - out["phi_norm"],
                         out["psi_poly_bound"] - out["psi_norm"]))
    return [_verdict("s_image_bounded", slack)]


def run_verification(samples: int = 100, seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    verdicts = []
    verdicts += luxemburg_suite(rng, samples)
    verdicts += modular_suite(rng, samples)
    verdicts += norm_axioms_suite(rng, max(1, samples // 5))
    verdicts += operator_suite(rng, samples)
    verdicts += inverse_suite(rng, max(1, samples // 10))
    verdicts += s_bound_suite(rng, max(1, samples // 10))
    return verdicts
