"""The nonlocal operator L, the lower-order operator S, the energy and T = L^{-1}.

Dual vectors use the pairing ``<F, v> = sum_i F_i v_i``; quadrature weights
are folded into ``F``.  Functions are full nodal vectors; the solvers only
move the values on ``data.free`` and keep the Dirichlet layer at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .exponents import ExponentField, build_exponents
from .mesh import EmptyMesh, KernelTable, Mesh, build_kernel, build_mesh
from .modular import gagliardo_norm, lebesgue_norm, modular_lebesgue

__all__ = [
    "ProblemData",
    "NoConvergence",
    "phi",
    "apply_L",
    "apply_S",
    "energy",
    "energy_gradient",
    "apply_T",
    "pairing",
    "weak_residual",
    "embedding_constant",
    "s_image_bounds",
]


class NoConvergence(RuntimeError):
    """An iteration hit its budget; ``best`` holds the best iterate seen."""

    def __init__(self, message: str, best=None, trajectory=None, max_iter: int | None = None,
                 gnorm: float | None = None):
        super().__init__(message)
        self.best = best
        self.gnorm = gnorm
        self.trajectory = trajectory if trajectory is not None else []
        self.max_iter = max_iter


@dataclass(frozen=True)
class ProblemData:
    mesh: Mesh
    kernel: KernelTable
    field: ExponentField
    lam: float

    def __post_init__(self):
        n = self.mesh.n
        if self.kernel.n != n or self.field.n != n:
            raise ValueError("mesh, kernel and exponent field have different node counts")

    @classmethod
    def build(cls, box, h: float, s: float, p_expr, r_expr, lam: float) -> "ProblemData":
        mesh = build_mesh(box, h)
        field = build_exponents(p_expr, r_expr, mesh)
        kernel = build_kernel(mesh, s, field)
        return cls(mesh=mesh, kernel=kernel, field=field, lam=float(lam))

    @property
    def free(self) -> np.ndarray:
        return self.mesh.interior

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(self.free))

    def with_lambda(self, lam: float) -> "ProblemData":
        return ProblemData(self.mesh, self.kernel, self.field, float(lam))

    def extend(self, x: np.ndarray) -> np.ndarray:
        """Full nodal vector from values on the free nodes."""
        u = np.zeros(self.mesh.n)
        u[self.free] = x
        return u


def phi(t, p):
    """``|t|^{p-2} t``, continuously extended by 0 at t = 0."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, np.sign(t) * a ** (p - 1.0), 0.0)
    return out


def pairing(F, v) -> float:
    return float(np.dot(F, v))


def apply_L(u, data: ProblemData) -> np.ndarray:
    """``(Lu)_i = 2 sum_{j != i} K_ij |u_i - u_j|^{p_ij - 2} (u_i - u_j)``."""
    u = np.asarray(u, dtype=float)
    d = u[:, None] - u[None, :]
    return 2.0 * np.sum(data.kernel.K * phi(d, data.field.p), axis=1)


def apply_S(u, data: ProblemData) -> np.ndarray:
    """``(Su)_i = w_i (|u_i|^{q_i-2} u_i - lam |u_i|^{r_i-2} u_i)``."""
    u = np.asarray(u, dtype=float)
    f = data.field
    return data.mesh.weights * (phi(u, f.q) - data.lam * phi(u, f.r))


def _pair_energy(u, data: ProblemData) -> float:
    d = np.abs(u[:, None] - u[None, :])
    p = data.field.p
    return float(np.sum(data.kernel.K * d ** p / p))


def energy(u, data: ProblemData) -> float:
    u = np.asarray(u, dtype=float)
    f = data.field
    a = np.abs(u)
    local = np.dot(data.mesh.weights, a ** f.q / f.q - data.lam * a ** f.r / f.r)
    return _pair_energy(u, data) + float(local)


def energy_gradient(u, data: ProblemData) -> np.ndarray:
    return apply_L(u, data) + apply_S(u, data)


def weak_residual(u, data: ProblemData) -> float:
    """``max_i |<Lu + Su, e_i>|`` over the free nodes."""
    r = energy_gradient(u, data)[data.free]
    return float(np.max(np.abs(r))) if r.size else 0.0


def _clipped_power(a: np.ndarray, e, floor: float) -> np.ndarray:
    return np.maximum(a, floor) ** e


def _pair_hessian(u, data: ProblemData, floor: float) -> np.ndarray:
    d = np.abs(u[:, None] - u[None, :])
    p = data.field.p
    C = 2.0 * data.kernel.K * (p - 1.0) * _clipped_power(d, p - 2.0, floor)
    np.fill_diagonal(C, 0.0)
    return np.diag(C.sum(axis=1)) - C


def _local_curvature(u, data: ProblemData, floor: float, convex_only: bool) -> np.ndarray:
    f = data.field
    a = np.abs(u)
    w = data.mesh.weights
    pos = w * (f.q - 1.0) * _clipped_power(a, f.q - 2.0, floor)
    lam_part = -data.lam * w * (f.r - 1.0) * _clipped_power(a, f.r - 2.0, floor)
    if convex_only:
        return pos + np.maximum(lam_part, 0.0)
    return pos + lam_part


def _cholesky_solve(A: np.ndarray, b: np.ndarray):
    try:
        c = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return None
    y = np.linalg.solve(c, b)
    return np.linalg.solve(c.T, y)


def descent(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    hessians: Callable[[np.ndarray], list],
    x0: np.ndarray,
    gtol: float,
    max_iter: int,
    on_step: Callable[[int, np.ndarray, float, float], None] | None = None,
):
    """Armijo backtracking descent with (clipped) second-order directions.

    ``hessians(x)`` returns candidate SPD-ish matrices tried in order; when
    none yields a usable direction the steepest-descent direction is used.
    Returns ``(x, gnorm, iterations)``; raises :class:`NoConvergence`.
    """
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    for it in range(max_iter + 1):
        if on_step is not None:
            on_step(it, x, f, gnorm)
        if gnorm <= gtol:
            return x, gnorm, it
        if it == max_iter:
            break
        accepted = False
        directions = []
        for H in hessians(x):
            d = _cholesky_solve(H, -g)
            if d is not None and np.all(np.isfinite(d)) and np.dot(d, g) < 0:
                directions.append(d)
        directions.append(-g / max(1.0, float(np.max(np.abs(g)))))
        roundoff = 64 * np.finfo(float).eps * abs(f)
        for d in directions:
            slope = float(np.dot(g, d))
            alpha = 1.0
            for _ in range(80):
                xn = x + alpha * d
                fn = fun(xn)
                if not np.isfinite(fn):
                    alpha *= 0.5
                    continue
                if fn <= f + 1e-4 * alpha * slope and fn < f:
                    gn = grad(xn)
                    break
                # the energy cannot resolve this step: use the gradient as merit
                if abs(alpha * slope) <= roundoff and fn <= f + roundoff:
                    gn = grad(xn)
                    if float(np.max(np.abs(gn))) < gnorm:
                        break
                alpha *= 0.5
            else:
                continue
            x, f, g, gnorm = xn, fn, gn, float(np.max(np.abs(gn)))
            accepted = True
            break
        if not accepted:
            break
    raise NoConvergence(
        f"descent stalled with gradient {gnorm:.3e} > {gtol:.3e}", best=x, max_iter=max_iter,
        gnorm=gnorm,
    )


def _floor(x: np.ndarray) -> float:
    # relative to the iterate so that tiny solutions keep their curvature
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return 1e-9 * scale if scale > 0 else 1e-9


def roundoff_floor(u, data: ProblemData) -> float:
    """Attainable accuracy of ``Lu`` in floating point, from the size of its terms."""
    d = np.abs(u[:, None] - u[None, :])
    terms = 2.0 * np.sum(data.kernel.K * d ** (data.field.p - 1.0), axis=1)
    return 256 * np.finfo(float).eps * float(np.max(terms[data.free], initial=0.0))


def apply_T(v, data: ProblemData, tol: float = 1e-10, u0=None, max_iter: int = 200) -> np.ndarray:
    """Solve ``L u = v`` on the free nodes (u = 0 on the Dirichlet layer).

    Minimises the strictly convex ``sum K |u_i - u_j|^p / p - <v, u>``.  When
    ``tol`` lies below the round-off level of evaluating ``Lu`` the iterate is
    accepted once the descent stalls inside that level.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    free = data.free
    if not np.any(free):
        raise EmptyMesh("the mesh has no interior unknowns")
    v = np.asarray(v, dtype=float)
    vf = v[free]
    if not np.any(vf):
        return np.zeros(data.mesh.n)

    def fun(x):
        u = data.extend(x)
        return _pair_energy(u, data) - float(np.dot(vf, x))

    def grad(x):
        return apply_L(data.extend(x), data)[free] - vf

    def hessians(x):
        u = data.extend(x)
        return [_pair_hessian(u, data, _floor(x))[np.ix_(free, free)]]

    x0 = np.zeros(data.n_free) if u0 is None else np.asarray(u0, dtype=float)[free]
    try:
        x, _, _ = descent(fun, grad, hessians, x0, tol, max_iter)
    except NoConvergence as exc:
        u = data.extend(exc.best)
        if exc.gnorm is not None and exc.gnorm <= roundoff_floor(u, data):
            return u
        raise NoConvergence(str(exc), best=u, max_iter=max_iter, gnorm=exc.gnorm) from None
    return data.extend(x)


def newton_hessians(u, data: ProblemData) -> list:
    """Full and convexified energy Hessians on the free nodes."""
    free = data.free
    fl = _floor(u)
    P = _pair_hessian(u, data, fl)
    full = P + np.diag(_local_curvature(u, data, fl, convex_only=False))
    convex = P + np.diag(_local_curvature(u, data, fl, convex_only=True))
    ix = np.ix_(free, free)
    return [full[ix], convex[ix]]


def embedding_constant(data: ProblemData, expo, samples: int = 64, rng=None, extra=()) -> float:
    """Lower estimate of ``sup ||w||_{expo} / ||w||_{W0}`` over free-node functions.

    Random samples plus any functions in ``extra``; the sup over a finite set
    is what the discrete a priori chain needs when ``extra`` contains the
    function the chain is applied to.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    free = data.free
    cands = [data.extend(rng.uniform(-1.0, 1.0, data.n_free)) for _ in range(samples)]
    cands.append(data.extend(np.ones(data.n_free)))
    cands.extend(np.asarray(e, dtype=float) for e in extra)
    best = 0.0
    for w in cands:
        if not np.any(w[free]):
            continue
        num = lebesgue_norm(w, expo, data.mesh)
        den = gagliardo_norm(w, data.kernel, data.field)
        best = max(best, num / den)
    return best


def s_image_bounds(u, data: ProblemData, w0_bound: float | None = None,
                   consts: Mapping[str, float] | None = None) -> dict:
    """Check the boundedness estimates of the two parts of S on one function.

    With ``phi u = |u|^{q-2} u`` and ``psi u = -lam |u|^{r-2} u`` measured in
    the conjugate Lebesgue norm ``q' = q / (q - 1)``::

        ||phi u||_{q'} <= rho_q(u) + 1
        ||psi u||_{q'} <= max(|lam|^{q'-}, |lam|^{q'+}) rho_alpha(u) + 1,  alpha = (r - 1) q'

    and, for ``||u||_{W0} <= M`` with embedding constants ``C_q, C_alpha``,
    the polynomial bound ``sum over e in {q-, q+} (C_q M)^e + 1`` (same for alpha).
    """
    u = np.asarray(u, dtype=float)
    f = data.field
    mesh = data.mesh
    qc = f.q / (f.q - 1.0)
    alpha = (f.r - 1.0) * qc
    lam = abs(data.lam)

    phi_u = phi(u, f.q)
    psi_u = -data.lam * phi(u, f.r)
    phi_norm = lebesgue_norm(phi_u, qc, mesh)
    psi_norm = lebesgue_norm(psi_u, qc, mesh)
    rho_q = modular_lebesgue(u, f.q, mesh)
    rho_alpha = modular_lebesgue(u, alpha, mesh)
    lam_factor = max(lam ** qc.min(), lam ** qc.max()) if lam > 0 else 0.0
    out = {
        "phi_norm": phi_norm,
        "phi_bound": rho_q + 1.0,
        "psi_norm": psi_norm,
        "psi_bound": lam_factor * rho_alpha + 1.0,
    }
    if w0_bound is not None:
        consts = consts or {}
        cq = consts.get("q", embedding_constant(data, f.q, extra=(u,)))
        ca = consts.get("alpha", embedding_constant(data, alpha, extra=(u,)))
        M = float(w0_bound)
        out["phi_poly_bound"] = (cq * M) ** f.q_minus + (cq * M) ** f.q_plus + 1.0
        out["psi_poly_bound"] = lam_factor * (
            (ca * M) ** float(alpha.min()) + (ca * M) ** float(alpha.max())
        ) + 1.0
    out["holds"] = bool(
        out["phi_norm"] <= out["phi_bound"] * (1 + 1e-12)
        and out["psi_norm"] <= out["psi_bound"] * (1 + 1e-12)
        and out.get("phi_poly_bound", np.inf) * (1 + 1e-12) >= out["phi_norm"]
        and out.get("psi_poly_bound", np.inf) * (1 + 1e-12) >= out["psi_norm"]
    )
    return out
