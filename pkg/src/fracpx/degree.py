"""Brouwer degree on boxes in R^1 and R^2, and the homotopy check for I + S o T.

The degree on an interval is the signed count of endpoint signs; on a
rectangle it is the winding number of ``F - h`` along the boundary, sampled
adaptively.  Boundary certification is numerical evidence from samples,
not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .operators import NoConvergence, ProblemData, apply_L, apply_S, apply_T
from .solver import Diverged, SolverConfig, _picard, seed_function

__all__ = [
    "DegreeProblem",
    "DegreeResult",
    "BoundaryHit",
    "RefinementLimit",
    "degree",
    "degree_1d",
    "degree_2d",
    "locate_root",
    "locate_roots",
    "HomotopyVerdict",
    "reduced_map",
    "verify_homotopy_invariance",
    "MAP_PRESETS",
]

MAX_SAMPLES = 2 ** 20
# segment accepted once |F(b) - F(a)| <= REFINE_RATIO * min boundary distance
REFINE_RATIO = 0.1


class BoundaryHit(ValueError):
    """The target is (numerically) attained on the boundary of the region."""


class RefinementLimit(RuntimeError):
    """Adaptive boundary sampling needed more than the sample budget."""


@dataclass
class DegreeProblem:
    map: Callable[[np.ndarray], np.ndarray]
    region: tuple
    target: Sequence[float] | float = 0.0
    boundary_resolution: int = 16
    atol: float = 1e-12
    max_samples: int = MAX_SAMPLES
    # require min boundary distance > modulus / REFINE_RATIO over the whole loop
    certify: bool = True

    @property
    def dim(self) -> int:
        return len(self.region)


@dataclass
class DegreeResult:
    degree: int
    min_distance: float
    modulus: float
    samples: int
    winding: float = field(default=float("nan"))


def _as_region(region) -> tuple:
    region = tuple(tuple(float(c) for c in r) for r in region)
    for lo, hi in region:
        if not lo < hi:
            raise ValueError(f"empty region side [{lo}, {hi}]")
    return region


def degree(prob: DegreeProblem) -> DegreeResult:
    region = _as_region(prob.region)
    if len(region) == 1:
        return _degree_1d(prob.map, region, prob.target, prob.atol)
    if len(region) == 2:
        return _degree_2d(prob.map, region, prob.target, prob.boundary_resolution, prob.atol,
                          prob.max_samples, prob.certify)
    raise ValueError("only dimensions 1 and 2 are supported")


def _scalar(F, x: float) -> float:
    return float(np.ravel(F(np.array([x])))[0])


def _degree_1d(F, region, target, atol) -> DegreeResult:
    (a, b), = region
    h = float(np.ravel(target)[0])
    fa, fb = _scalar(F, a) - h, _scalar(F, b) - h
    dist = min(abs(fa), abs(fb))
    if not dist > atol * max(1.0, abs(h)):
        raise BoundaryHit(f"|F - h| = {dist:.3e} at an endpoint of [{a}, {b}]")
    deg = int((np.sign(fb) - np.sign(fa)) // 2)
    return DegreeResult(degree=deg, min_distance=dist, modulus=0.0, samples=2)


def degree_1d(F, region, target=0.0, atol: float = 1e-12) -> int:
    """``(sign(F(b) - h) - sign(F(a) - h)) / 2`` on ``[a, b]``."""
    region = _as_region(region if np.ndim(region[0]) else (region,))
    return _degree_1d(F, region, target, atol).degree


def _loop_point(region, s: float) -> np.ndarray:
    (x0, x1), (y0, y1) = region
    k = min(int(s), 3)
    f = s - k
    if k == 0:
        return np.array([x0 + f * (x1 - x0), y0])
    if k == 1:
        return np.array([x1, y0 + f * (y1 - y0)])
    if k == 2:
        return np.array([x1 - f * (x1 - x0), y1])
    return np.array([x0, y1 - f * (y1 - y0)])


def _degree_2d(F, region, target, resolution, atol, max_samples=MAX_SAMPLES,
               certify: bool = True) -> DegreeResult:
    h = np.broadcast_to(np.asarray(target, dtype=float), (2,))
    thresh = atol * max(1.0, float(np.max(np.abs(h))))

    def g(s):
        val = np.asarray(F(_loop_point(region, s)), dtype=float).reshape(2) - h
        dist = float(np.hypot(*val))
        if not dist > thresh:
            raise BoundaryHit(f"|F - h| = {dist:.3e} at boundary point {_loop_point(region, s)}")
        return val, dist

    n0 = max(1, int(resolution))
    params = [k + j / n0 for k in range(4) for j in range(n0)]
    values = [g(s) for s in params]
    samples = len(params)
    min_dist = min(d for _, d in values)
    # repeat the walk until the certificate min_dist > modulus / REFINE_RATIO holds;
    # without certify each segment only meets the ratio against its own endpoints
    while True:
        total_angle, modulus, samples, min_dist, params, values = _walk(
            g, params, values, samples, min_dist if certify else np.inf, max_samples)
        if not certify or modulus < REFINE_RATIO * min_dist:
            break
    min_dist = min(d for _, d in values)
    winding = total_angle / (2.0 * np.pi)
    return DegreeResult(degree=int(round(winding)), min_distance=min_dist, modulus=modulus,
                        samples=samples, winding=winding)


def _walk(g, params, values, samples, min_dist, max_samples):
    """One pass along the loop; segments are split until |dF| <= REFINE_RATIO * dist.

    ``dist`` is the smaller endpoint distance, capped by the smallest distance
    seen so far, so a pass that finds no closer point certifies the loop.
    """
    total_angle = 0.0
    modulus = 0.0
    new_params, new_values = [], []
    for idx in range(len(params)):
        s_a = params[idx]
        s_b = params[idx + 1] if idx + 1 < len(params) else 4.0
        va, da = values[idx]
        vb, db = values[(idx + 1) % len(params)]
        new_params.append(s_a)
        new_values.append((va, da))
        stack = [(s_b, vb, db)]
        while stack:
            s_b, vb, db = stack[-1]
            step = float(np.hypot(*(vb - va)))
            if step >= REFINE_RATIO * min(da, db, min_dist):
                if samples >= max_samples:
                    raise RefinementLimit(f"more than {max_samples} boundary samples needed")
                s_m = 0.5 * (s_a + s_b)
                vm, dm = g(s_m)
                samples += 1
                min_dist = min(min_dist, dm)
                stack.append((s_m, vm, dm))
                continue
            stack.pop()
            modulus = max(modulus, step)
            turn = np.arctan2(va[0] * vb[1] - va[1] * vb[0], np.dot(va, vb))
            total_angle += float(turn)
            s_a, va, da = s_b, vb, db
            if stack:
                new_params.append(s_a)
                new_values.append((va, da))
    return total_angle, modulus, samples, min_dist, new_params, new_values


def degree_2d(F, region, target=(0.0, 0.0), boundary_resolution: int = 16,
              atol: float = 1e-12) -> int:
    """Winding number of ``F - h`` along the counter-clockwise boundary of a rectangle."""
    return _degree_2d(F, _as_region(region), target, boundary_resolution, atol).degree


def _split(region, axis: int, frac: float):
    lo, hi = region[axis]
    cut = lo + frac * (hi - lo)
    left = list(region)
    right = list(region)
    left[axis] = (lo, cut)
    right[axis] = (cut, hi)
    return tuple(left), tuple(right)


_CUTS = (0.5, 0.5 + 1 / 97, 0.5 - 1 / 89, 0.5 + 1 / 31, 0.5 - 1 / 29)
SEARCH_SAMPLES = 2 ** 10
# a cut grazing a root shows up as either exception
_NEAR_ROOT = (BoundaryHit, RefinementLimit)


def _newton_polish(F, region, target, xtol: float, max_iter: int = 30):
    """Newton with a difference Jacobian from the box centre; ``None`` unless it
    converges without leaving the box."""
    lo = np.array([a for a, _ in region])
    hi = np.array([b for _, b in region])
    h = np.broadcast_to(np.asarray(target, dtype=float), lo.shape)
    x = 0.5 * (lo + hi)
    step = 1e-3 * float(np.max(hi - lo))

    def G(y):
        return np.asarray(F(y), dtype=float).reshape(-1) - h

    for _ in range(max_iter):
        gx = G(x)
        J = np.column_stack([(G(x + e) - G(x - e)) / (2 * step) for e in np.eye(x.size) * step])
        try:
            dx = np.linalg.solve(J, -gx)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if not np.all(np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
            return None
        if float(np.max(np.abs(dx))) <= xtol:
            return x
        step = min(step, max(float(np.max(np.abs(dx))), xtol))
    return None


def locate_root(F, region, target=0.0, xtol: float = 1e-12, resolution: int = 8,
                atol: float = 1e-14):
    """Subdivision search for a solution of ``F(x) = h`` in a region of nonzero degree.

    Every box is first handed to Newton, whose limit is accepted only when
    the iterates never leave that box of nonzero degree.  Returns ``None`` when the
    region has degree zero; raises :class:`RefinementLimit` when no cut of a
    box is usable.
    """
    region = _as_region(region)

    def deg(reg):
        return degree(DegreeProblem(F, reg, target, resolution, atol, SEARCH_SAMPLES,
                                    certify=False)).degree

    if deg(region) == 0:
        return None
    scale = max(hi - lo for lo, hi in region)
    while True:
        widths = [hi - lo for lo, hi in region]
        axis = int(np.argmax(widths))
        if widths[axis] <= xtol * max(1.0, scale):
            return np.array([0.5 * (lo + hi) for lo, hi in region])
        root = _newton_polish(F, region, target, xtol * max(1.0, scale))
        if root is not None:
            return root
        for frac in _CUTS:
            left, right = _split(region, axis, frac)
            try:
                dl = deg(left)
            except _NEAR_ROOT:
                # a cut through a root: exact hit counts as located
                if len(region) == 1:
                    return np.array([left[0][1]])
                continue
            if dl != 0:
                region = left
                break
            try:
                dr = deg(right)
            except _NEAR_ROOT:
                continue
            if dr != 0:
                region = right
                break
        else:
            root = _newton_polish(F, region, target, xtol * max(1.0, scale))
            if root is None:
                raise RefinementLimit(f"no usable cut of the box {region} around a root")
            return root


def locate_roots(F, region, target=0.0, cells: int = 63, xtol: float = 1e-12,
                 resolution: int = 8, atol: float = 1e-14) -> list[np.ndarray]:
    """Roots in grid cells of nonzero degree (cells whose roots cancel are missed)."""
    region = _as_region(region)
    dim = len(region)
    per_axis = cells if dim == 1 else max(2, int(round(np.sqrt(cells))))
    edges = [np.linspace(lo, hi, per_axis + 1) for lo, hi in region]
    roots = []
    for idx in np.ndindex(*(per_axis,) * dim):
        cell = tuple((edges[k][i], edges[k][i + 1]) for k, i in enumerate(idx))
        try:
            root = locate_root(F, cell, target, xtol, resolution, atol)
        except _NEAR_ROOT:
            # shrink the cell slightly to step off a root on its boundary
            pad = [1e-7 * (hi - lo) for lo, hi in cell]
            cell = tuple((lo + p, hi - p) for (lo, hi), p in zip(cell, pad))
            try:
                root = locate_root(F, cell, target, xtol, resolution, atol)
            except _NEAR_ROOT:
                root = None
        if root is not None:
            roots.append(root)
    return roots


# ---------------------------------------------------------------------------
# reduced maps v -> v + t S(T v)


def reduced_map(data: ProblemData, t: float, tol: float = 1e-13):
    """``x -> x + t S(T x)`` on the free nodes, as a map R^m -> R^m."""
    free = data.free
    cache = {}

    def H(x):
        x = np.asarray(x, dtype=float).reshape(-1)
        key = (float(t),) + tuple(x)
        if key not in cache:
            u = apply_T(data.extend(x), data, tol)
            cache[key] = x + t * apply_S(u, data)[free]
        return cache[key]

    return H


@dataclass
class HomotopyVerdict:
    radius: float
    degrees: dict
    doublings: int
    roots_v: list
    roots_u: list
    tracked: dict

    @property
    def invariant(self) -> bool:
        return len(set(self.degrees.values())) == 1

    @property
    def all_one(self) -> bool:
        return all(d == 1 for d in self.degrees.values())

    @property
    def existence(self) -> bool:
        # nonzero degree at t = 1 must come with a located root
        return self.degrees[max(self.degrees)] == 0 or len(self.roots_v) > 0


def verify_homotopy_invariance(
    data: ProblemData,
    t_values=(0.0, 0.25, 0.5, 0.75, 1.0),
    radius: float | None = None,
    max_doublings: int = 5,
    resolution: int = 8,
    cells: int | None = None,
    cfg: SolverConfig | None = None,
    xtol: float = 1e-12,
) -> HomotopyVerdict:
    """Degree of ``H(t, .)`` on one box ``[-R, R]^m`` for every ``t``; roots at ``t = 1``.

    Roots along the nontrivial branch are tracked by warm-started damped
    Picard; together with the trivial root they set the initial radius.
    """
    m = data.n_free
    if not 1 <= m <= 2:
        raise ValueError(f"homotopy check needs 1 or 2 unknowns, the mesh has {m}")
    cfg = cfg or SolverConfig(strategy="continuation", tol=1e-12, max_iter=2000)
    free = data.free

    tracked = {0.0: np.zeros(m)}
    seed = seed_function(cfg.seed, data, cfg.seed_scale, cfg.rng_seed)
    v = np.zeros(data.mesh.n)
    u = None
    for t in sorted(t_values):
        if t == 0.0:
            continue
        start = v if np.any(v) else apply_L(seed, data)
        try:
            v, u, _ = _picard(data, cfg, start, float(t), [], u_guess=u)
        except (NoConvergence, Diverged):
            v = np.zeros(data.mesh.n)
        tracked[float(t)] = v[free].copy()
    if radius is None:
        radius = 2.0 * max(float(np.max(np.abs(r))) for r in tracked.values())
        radius = radius if radius > 0 else 1.0

    doublings = 0
    while True:
        region = ((-radius, radius),) * m
        try:
            degrees = {}
            for t in t_values:
                H = reduced_map(data, float(t))
                degrees[float(t)] = degree(DegreeProblem(H, region, np.zeros(m), resolution)).degree
            break
        except BoundaryHit:
            if doublings >= max_doublings:
                raise
            radius *= 2.0
            doublings += 1

    roots_v, roots_u = [], []
    t_last = float(max(t_values))
    if degrees[t_last] != 0:
        H = reduced_map(data, t_last)
        n_cells = cells if cells is not None else (63 if m == 1 else 49)
        for r in locate_roots(H, region, np.zeros(m), cells=n_cells, xtol=xtol, resolution=resolution):
            roots_v.append(r)
            roots_u.append(apply_T(data.extend(r), data, 1e-13))
    return HomotopyVerdict(radius=radius, degrees=degrees, doublings=doublings,
                           roots_v=roots_v, roots_u=roots_u, tracked=tracked)


# ---------------------------------------------------------------------------
# map presets for the CLI


def _cubic(x):
    x = np.asarray(x, dtype=float)
    return (x + 0.5) * x * (x - 0.5)


MAP_PRESETS: dict[str, Callable] = {
    "identity": lambda x: np.asarray(x, dtype=float),
    "neg_identity": lambda x: -np.asarray(x, dtype=float),
    "zsquared": lambda x: np.array([x[0] ** 2 - x[1] ** 2, 2.0 * x[0] * x[1]]),
    "zcubed": lambda x: np.array([x[0] ** 3 - 3 * x[0] * x[1] ** 2, 3 * x[0] ** 2 * x[1] - x[1] ** 3]),
    "conjugate": lambda x: np.array([x[0], -x[1]]),
    "square": lambda x: np.asarray(x, dtype=float) ** 2,
    "cubic": _cubic,
}
