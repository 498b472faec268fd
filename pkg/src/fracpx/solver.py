"""Weak solutions of the nonlocal Dirichlet problem ``Lu + Su = 0``.

Three strategies share one report format:

* ``minimize``: Armijo descent on the energy from a seed function;
* ``picard``: damped fixed-point iteration ``v <- (1-d) v - d S(T v)`` in the
  dual variable ``v = Lu``;
* ``continuation``: follows ``v + t S(T v) = 0`` from ``t = 0`` (root
  ``v = 0``) to ``t = 1`` with warm starts.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .mesh import EmptyMesh
from .modular import gagliardo_norm, lebesgue_norm, modular_gagliardo
from .operators import (
    NoConvergence,
    ProblemData,
    apply_L,
    apply_S,
    apply_T,
    descent,
    embedding_constant,
    energy,
    energy_gradient,
    newton_hessians,
    weak_residual,
)

__all__ = [
    "SolverConfig",
    "SolveReport",
    "Diverged",
    "ContinuationStall",
    "seed_function",
    "solve",
    "solve_minimize",
    "solve_picard",
    "solve_continuation",
    "verify_apriori",
    "lambda_sweep",
    "STRATEGIES",
    "SEEDS",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("minimize", "picard", "continuation")
SEEDS = ("constant", "random", "bump", "zero")
DIVERGENCE_FACTOR = 1e6
TRUNCATION_NOTE = (
    "regional kernel over Omega x Omega; exterior interactions omitted; "
    "Dirichlet layer = outermost ring of cells pinned to 0"
)


class Diverged(RuntimeError):
    def __init__(self, message: str, best=None, trajectory=None):
        super().__init__(message)
        self.best = best
        self.trajectory = trajectory or []


class ContinuationStall(RuntimeError):
    """Inner solve failed at ``t``; ``last_t``/``last_root`` are the last good point."""

    def __init__(self, t: float, last_t: float, last_root, trajectory=None):
        super().__init__(f"continuation stalled at t={t:.6g} (last good t={last_t:.6g})")
        self.t = t
        self.last_t = last_t
        self.last_root = last_root
        self.trajectory = trajectory or []


@dataclass
class SolverConfig:
    strategy: str = "minimize"
    max_iter: int = 500
    tol: float = 1e-9
    damping: float = 0.5
    continuation_steps: int = 11
    seed: str = "constant"
    seed_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.seed not in SEEDS:
            raise ValueError(f"unknown seed {self.seed!r}; choose from {SEEDS}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.continuation_steps < 2:
            raise ValueError("continuation needs at least 2 parameter values")

    @property
    def inner_tol(self) -> float:
        return 1e-3 * self.tol


@dataclass
class SolveReport:
    u: np.ndarray
    residual: float
    energy: float
    norms: dict
    nontrivial: bool
    tol: float
    strategy: str
    iterations: int
    trajectory: list = field(default_factory=list)
    apriori: dict | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.residual <= self.tol

    def to_dict(self) -> dict:
        out = asdict(self)
        out["u"] = [float(x) for x in self.u]
        out["converged"] = self.converged
        return out


def seed_function(name: str, data: ProblemData, scale: float = 1.0, rng_seed: int = 0) -> np.ndarray:
    """Seed presets on the free nodes; the Dirichlet layer stays at zero."""
    m = data.n_free
    if name == "constant":
        x = np.ones(m)
    elif name == "random":
        x = np.random.default_rng(rng_seed).uniform(-1.0, 1.0, m)
    elif name == "bump":
        box = data.mesh.box
        nodes = data.mesh.nodes[data.free]
        gap = np.minimum(nodes - np.asarray(box.lower), np.asarray(box.upper) - nodes)
        x = np.min(gap, axis=1)
        x = x / x.max()
    elif name == "zero":
        x = np.zeros(m)
    else:
        raise ValueError(f"unknown seed {name!r}; choose from {SEEDS}")
    return data.extend(scale * x)


def make_report(u, data: ProblemData, cfg: SolverConfig, strategy: str, iterations: int,
                trajectory: list, extra_meta: dict | None = None) -> SolveReport:
    # everything recomputed from the returned u
    u = np.asarray(u, dtype=float)
    f = data.field
    norms = {
        "w0": gagliardo_norm(u, data.kernel, f),
        "q": lebesgue_norm(u, f.q, data.mesh),
        "r": lebesgue_norm(u, f.r, data.mesh),
        "sup": float(np.max(np.abs(u))),
    }
    meta = {"truncation": TRUNCATION_NOTE, "n_nodes": data.mesh.n, "n_free": data.n_free,
            "lambda": data.lam}
    meta.update(extra_meta or {})
    return SolveReport(
        u=u,
        residual=weak_residual(u, data),
        energy=energy(u, data),
        norms=norms,
        nontrivial=bool(norms["sup"] > 100.0 * cfg.tol),
        tol=cfg.tol,
        strategy=strategy,
        iterations=iterations,
        trajectory=trajectory,
        metadata=meta,
    )


def _require_unknowns(data: ProblemData):
    if data.n_free == 0:
        raise EmptyMesh("the mesh has no interior unknowns; refine h")


def solve_minimize(data: ProblemData, cfg: SolverConfig) -> SolveReport:
    _require_unknowns(data)
    free = data.free
    u0 = seed_function(cfg.seed, data, cfg.seed_scale, cfg.rng_seed)
    trajectory: list = []

    def fun(x):
        return energy(data.extend(x), data)

    def grad(x):
        return energy_gradient(data.extend(x), data)[free]

    def hessians(x):
        return newton_hessians(data.extend(x), data)

    def record(it, x, f, g):
        trajectory.append({"iteration": it, "residual": g, "energy": f})

    try:
        x, _, its = descent(fun, grad, hessians, u0[free], cfg.tol, cfg.max_iter, on_step=record)
    except NoConvergence as exc:
        raise NoConvergence(str(exc), best=data.extend(exc.best), trajectory=trajectory,
                            max_iter=cfg.max_iter) from None
    return make_report(data.extend(x), data, cfg, "minimize", its, trajectory)


def _picard(data: ProblemData, cfg: SolverConfig, v, t: float, trajectory: list, u_guess=None):
    """Damped fixed-point iteration for ``v + t S(T v) = 0``; returns ``(v, u, iterations)``."""
    free = data.free
    v = np.where(free, v, 0.0)
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    u = u_guess
    for it in range(cfg.max_iter + 1):
        u = apply_T(v, data, cfg.inner_tol, u0=u)
        g = apply_L(u, data) + t * apply_S(u, data)
        res = float(np.max(np.abs(g[free])))
        trajectory.append({"t": t, "iteration": it, "residual": res, "energy": energy(u, data)})
        if res <= cfg.tol:
            return v, u, it
        if it == cfg.max_iter:
            break
        v = (1.0 - cfg.damping) * v - cfg.damping * t * np.where(free, apply_S(u, data), 0.0)
        if float(np.max(np.abs(v))) > DIVERGENCE_FACTOR * scale:
            raise Diverged(f"|v| exceeded {DIVERGENCE_FACTOR:g} x its initial size at t={t:g}",
                           best=u, trajectory=trajectory)
    raise NoConvergence(f"Picard iteration did not reach {cfg.tol:g} at t={t:g}", best=u,
                        trajectory=trajectory, max_iter=cfg.max_iter)


def solve_picard(data: ProblemData, cfg: SolverConfig) -> SolveReport:
    _require_unknowns(data)
    u0 = seed_function(cfg.seed, data, cfg.seed_scale, cfg.rng_seed)
    trajectory: list = []
    _, u, its = _picard(data, cfg, apply_L(u0, data), 1.0, trajectory, u_guess=u0)
    return make_report(u, data, cfg, "picard", its, trajectory, {"damping": cfg.damping})


def solve_continuation(data: ProblemData, cfg: SolverConfig) -> SolveReport:
    """Path following for ``H(t, v) = v + t S(T v)``.

    At ``t = 0`` the root is ``v = 0``.  Because ``v = 0`` solves every
    ``H(t, .) = 0``, a step whose warm start is the trivial root starts from
    the seed instead, so the nontrivial branch is followed when one exists.
    """
    _require_unknowns(data)
    ts = np.linspace(0.0, 1.0, cfg.continuation_steps)
    seed = seed_function(cfg.seed, data, cfg.seed_scale, cfg.rng_seed)
    trajectory: list = []
    path = [{"t": 0.0, "v_sup": 0.0, "u_sup": 0.0}]
    v = np.zeros(data.mesh.n)
    u = np.zeros(data.mesh.n)
    last_t = 0.0
    total = 0
    for t in ts[1:]:
        if np.any(v):
            start, guess = v, u
        else:
            start, guess = apply_L(seed, data), seed
        try:
            v, u, its = _picard(data, cfg, start, float(t), trajectory, u_guess=guess)
        except (NoConvergence, Diverged) as exc:
            raise ContinuationStall(float(t), last_t, v, trajectory) from exc
        total += its
        last_t = float(t)
        path.append({"t": float(t), "v_sup": float(np.max(np.abs(v))),
                     "u_sup": float(np.max(np.abs(u)))})
    report = make_report(u, data, cfg, "continuation", total, trajectory)
    report.metadata["path"] = path
    return report


_DISPATCH = {
    "minimize": solve_minimize,
    "picard": solve_picard,
    "continuation": solve_continuation,
}


def solve(data: ProblemData, cfg: SolverConfig) -> SolveReport:
    return _DISPATCH[cfg.strategy](data, cfg)


def verify_apriori(report: SolveReport, data: ProblemData, samples: int = 64, rng_seed: int = 0) -> dict:
    """Evaluate the a priori chain ``||u||^{p-} <= rho(u) = <Lu, u> = -<Su, u> <= ...``.

    The constant in ``||u||^{p-} <= C (||u||^{q+} + ||u||^{r+})`` is assembled
    from embedding constants estimated over random functions and ``u``.
    """
    u = np.asarray(report.u, dtype=float)
    residual = weak_residual(u, data)
    out: dict = {"residual": residual}
    if residual > report.tol:
        out.update(status="refused", holds=None,
                   reason=f"residual {residual:.3e} exceeds tol {report.tol:.3e}; not a solution")
        return out
    f = data.field
    w0 = gagliardo_norm(u, data.kernel, f)
    out["w0_norm"] = w0
    if w0 <= 1.0:
        out.update(status="bounded_trivially", holds=True)
        return out

    rng = np.random.default_rng(rng_seed)
    cq = embedding_constant(data, f.q, samples, rng, extra=(u,))
    cr = embedding_constant(data, f.r, samples, rng, extra=(u,))
    nq = lebesgue_norm(u, f.q, data.mesh)
    nr = lebesgue_norm(u, f.r, data.mesh)
    lam = abs(data.lam)
    rho = modular_gagliardo(u, data.kernel, f)
    dual = -float(np.dot(apply_S(u, data)[data.free], u[data.free]))
    local = float(np.dot(data.mesh.weights, np.abs(u) ** f.q + lam * np.abs(u) ** f.r))
    modular_bound = nq ** f.q_minus + nq ** f.q_plus + lam * (nr ** f.r_minus + nr ** f.r_plus)
    const = max(
        2.0 * max(cq ** f.q_minus, cq ** f.q_plus),
        2.0 * lam * max(cr ** f.r_minus, cr ** f.r_plus),
    )
    lhs = w0 ** f.p_minus
    rhs = const * (w0 ** f.q_plus + w0 ** f.r_plus)
    slack = 1e-9 * max(1.0, abs(rhs))
    chain_ok = _chain_holds(lhs, rho, dual, local, modular_bound, rhs, slack)
    out.update(
        status="checked",
        lhs=lhs,
        rhs=rhs,
        constant=const,
        embedding={"q": cq, "r": cr},
        chain={"norm_power": lhs, "modular": rho, "dual_pairing": dual,
               "local_modulars": local, "norm_powers": modular_bound},
        holds=bool(lhs <= rhs and chain_ok),
    )
    return out


def _chain_holds(lhs, rho, dual, local, modular_bound, rhs, slack) -> bool:
    # rho = <Lu, u> = -<Su, u> holds up to the residual; the rest are inequalities
    return (
        lhs <= rho + slack
        and abs(rho - dual) <= 1e-6 * max(1.0, rho)
        and dual <= local + slack
        and local <= modular_bound + slack
        and modular_bound <= rhs + slack
    )


def _sweep_one(args):
    data, lam, cfg = args
    d = data.with_lambda(lam)
    row = {"lambda": float(lam)}
    try:
        rep = solve(d, cfg)
    except (NoConvergence, Diverged, ContinuationStall) as exc:
        row.update(converged=False, residual=float("nan"), energy=float("nan"),
                   w0_norm=float("nan"), sup=float("nan"), nontrivial=False,
                   apriori=None, error=type(exc).__name__)
        return row, None
    apri = verify_apriori(rep, d)
    row.update(converged=rep.converged, residual=rep.residual, energy=rep.energy,
               w0_norm=rep.norms["w0"], sup=rep.norms["sup"], nontrivial=rep.nontrivial,
               apriori=apri.get("holds"), error="")
    return row, rep


def lambda_sweep(data: ProblemData, lambdas: Iterable[float], cfg: SolverConfig,
                 workers: int = 1) -> tuple[list[dict], list[SolveReport | None]]:
    """Solve for each lambda; rows keep the input order whatever ``workers`` is."""
    jobs = [(data, float(lam), cfg) for lam in lambdas]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    return [r for r, _ in results], [rep for _, rep in results]
