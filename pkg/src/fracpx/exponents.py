"""Variable exponents p(x, y), q(x) = p(x, x) and r(x) on a mesh.

Exponents are given either as Python callables or as named presets.  A
two-point callable receives coordinate arrays ``x`` and ``y`` of shape
``(..., N)`` and returns an array of shape ``(...)``; a one-point callable
receives ``x`` alone.

Presets (``kind`` plus parameters)::

    constant     value
    affine       base + slope * mean coordinate            (of x, or of x and y)
    radial       base + slope * distance to the box centre  (averaged over x and y)
    distance     base + slope * |x - y|                     (two-point only)
    oscillatory  base + amplitude * sin(2 pi * frequency * mean coordinate)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .mesh import Mesh

__all__ = [
    "ExponentField",
    "ConjugateExponent",
    "ExponentOutOfRange",
    "build_exponents",
    "conjugate",
    "two_point_preset",
    "one_point_preset",
    "PRESETS",
]

TwoPoint = Callable[[np.ndarray, np.ndarray], np.ndarray]
OnePoint = Callable[[np.ndarray], np.ndarray]

PRESETS = ("constant", "affine", "radial", "distance", "oscillatory")


class ExponentOutOfRange(ValueError):
    """An exponent violates 1 < p^- <= p <= p^+ < inf or 1 < r^- <= r^+ < p^-."""

    def __init__(self, message: str, where=None, value: float | None = None):
        super().__init__(message)
        self.where = where
        self.value = value


@dataclass(frozen=True)
class ExponentField:
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray

    @property
    def p_minus(self) -> float:
        return float(self.p.min())

    @property
    def p_plus(self) -> float:
        return float(self.p.max())

    @property
    def q_minus(self) -> float:
        return float(self.q.min())

    @property
    def q_plus(self) -> float:
        return float(self.q.max())

    @property
    def r_minus(self) -> float:
        return float(self.r.min())

    @property
    def r_plus(self) -> float:
        return float(self.r.max())

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def validate(self) -> "ExponentField":
        validate_field(self.p, self.r)
        if not np.array_equal(self.q, np.diag(self.p)):
            raise ExponentOutOfRange("q must equal the diagonal of p")
        return self


@dataclass(frozen=True)
class ConjugateExponent:
    p_prime: np.ndarray


def validate_field(p: np.ndarray, r: np.ndarray) -> None:
    """Full scan of the exponent conditions; raises on the first offending entry."""
    if not np.all(np.isfinite(p)):
        i, j = np.argwhere(~np.isfinite(p))[0]
        raise ExponentOutOfRange(
            f"p({i},{j}) = {p[i, j]} is not finite", where=(int(i), int(j)), value=float(p[i, j])
        )
    if np.any(p <= 1.0):
        i, j = np.unravel_index(np.argmin(p), p.shape)
        raise ExponentOutOfRange(
            f"exponent bound 1 < p^- violated: p({i},{j}) = {p[i, j]}",
            where=(int(i), int(j)), value=float(p[i, j]),
        )
    asym = np.abs(p - p.T)
    if np.any(asym > 0):
        i, j = np.unravel_index(np.argmax(asym), p.shape)
        raise ExponentOutOfRange(
            f"p is not symmetric at ({i},{j})", where=(int(i), int(j)), value=float(p[i, j])
        )
    if not np.all(np.isfinite(r)) or np.any(r <= 1.0):
        i = int(np.argmin(np.where(np.isfinite(r), r, -np.inf)))
        raise ExponentOutOfRange(
            f"exponent bound 1 < r^- violated: r({i}) = {r[i]}", where=i, value=float(r[i])
        )
    p_minus = float(p.min())
    if np.any(r >= p_minus):
        i = int(np.argmax(r))
        raise ExponentOutOfRange(
            f"condition r^+ < p^- violated: r({i}) = {r[i]} >= p^- = {p_minus}",
            where=i, value=float(r[i]),
        )


def build_exponents(p_expr: TwoPoint | Mapping, r_expr: OnePoint | Mapping, mesh: Mesh) -> ExponentField:
    """Evaluate, symmetrise and validate the exponents on every node (pair).

    ``p_expr`` and ``r_expr`` may be callables or preset mappings such as
    ``{"kind": "affine", "base": 2.0, "slope": 0.5}``.
    """
    if isinstance(p_expr, Mapping):
        p_expr = two_point_preset(mesh=mesh, **p_expr)
    if isinstance(r_expr, Mapping):
        r_expr = one_point_preset(mesh=mesh, **r_expr)

    x = mesh.nodes
    n = mesh.n
    raw = np.broadcast_to(
        np.asarray(p_expr(x[:, None, :], x[None, :, :]), dtype=float), (n, n)
    )
    p = 0.5 * (raw + raw.T)
    r = np.broadcast_to(np.asarray(r_expr(x), dtype=float), (n,)).copy()
    validate_field(p, r)
    return ExponentField(p=p, q=np.diag(p).copy(), r=r)


def conjugate(field: ExponentField) -> ConjugateExponent:
    q = field.q
    return ConjugateExponent(p_prime=q / (q - 1.0))


def _mean_coordinate(x: np.ndarray) -> np.ndarray:
    return np.mean(x, axis=-1)


def _center(mesh: Mesh | None, dim: int) -> np.ndarray:
    if mesh is None:
        return np.full(dim, 0.5)
    return mesh.box.center


def two_point_preset(kind: str, mesh: Mesh | None = None, **params) -> TwoPoint:
    base = float(params.get("base", params.get("value", 2.0)))
    slope = float(params.get("slope", 0.0))

    if kind == "constant":
        return lambda x, y: np.full(np.broadcast_shapes(x.shape, y.shape)[:-1], base)
    if kind == "affine":
        return lambda x, y: base + slope * 0.5 * (_mean_coordinate(x) + _mean_coordinate(y))
    if kind == "radial":
        def radial(x, y):
            c = _center(mesh, x.shape[-1])
            return base + slope * 0.5 * (
                np.linalg.norm(x - c, axis=-1) + np.linalg.norm(y - c, axis=-1)
            )
        return radial
    if kind == "distance":
        return lambda x, y: base + slope * np.linalg.norm(x - y, axis=-1)
    if kind == "oscillatory":
        amp = float(params.get("amplitude", 0.3))
        freq = float(params.get("frequency", 1.0))
        return lambda x, y: base + amp * np.sin(
            np.pi * freq * (_mean_coordinate(x) + _mean_coordinate(y))
        )
    raise ValueError(f"unknown two-point exponent preset {kind!r}; choose from {PRESETS}")


def one_point_preset(kind: str, mesh: Mesh | None = None, **params) -> OnePoint:
    base = float(params.get("base", params.get("value", 1.5)))
    slope = float(params.get("slope", 0.0))

    if kind == "constant":
        return lambda x: np.full(x.shape[:-1], base)
    if kind == "affine":
        return lambda x: base + slope * _mean_coordinate(x)
    if kind == "radial":
        return lambda x: base + slope * np.linalg.norm(x - _center(mesh, x.shape[-1]), axis=-1)
    if kind == "oscillatory":
        amp = float(params.get("amplitude", 0.3))
        freq = float(params.get("frequency", 1.0))
        return lambda x: base + amp * np.sin(2.0 * np.pi * freq * _mean_coordinate(x))
    if kind == "distance":
        raise ValueError("the 'distance' preset is two-point only")
    raise ValueError(f"unknown one-point exponent preset {kind!r}; choose from {PRESETS}")
