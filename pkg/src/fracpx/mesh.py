"""Uniform cell-centred grids on boxes and the pairwise singular kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Box",
    "Mesh",
    "KernelTable",
    "EmptyMesh",
    "InvalidOrder",
    "build_mesh",
    "build_kernel",
]


class EmptyMesh(ValueError):
    """Raised when a box cannot hold a single node (or a problem has no unknowns)."""


class InvalidOrder(ValueError):
    """Raised when the fractional order lies outside (0, 1)."""


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls((0.0,) * dim, (1.0,) * dim)

    @classmethod
    def from_extents(cls, extents: Sequence[Sequence[float]]) -> "Box":
        """Build from ``[[a0, b0], [a1, b1], ...]``."""
        lo = tuple(float(e[0]) for e in extents)
        hi = tuple(float(e[1]) for e in extents)
        return cls(lo, hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))


@dataclass(frozen=True)
class Mesh:
    """Cell centres of a uniform grid on a box.

    ``shape`` holds the per-axis cell counts; ``nodes`` are stored in C order
    of the multi-index.  The outermost ring of cells is the discrete
    Dirichlet layer: unknowns of the boundary value problem live on
    ``interior`` only, the ring is pinned to zero.
    """

    box: Box
    shape: tuple[int, ...]
    nodes: np.ndarray
    weights: np.ndarray
    h: float
    spacing: tuple[float, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior(self) -> np.ndarray:
        """Boolean mask of nodes that carry unknowns (not in the Dirichlet layer)."""
        idx = np.indices(self.shape).reshape(self.dim, -1)
        mask = np.ones(self.n, dtype=bool)
        for k, m in enumerate(self.shape):
            mask &= (idx[k] > 0) & (idx[k] < m - 1)
        return mask

    def reflect_permutation(self) -> np.ndarray:
        """Index permutation of the reflection through the box centre."""
        idx = np.arange(self.n).reshape(self.shape)
        return idx[tuple(slice(None, None, -1) for _ in self.shape)].ravel()


@dataclass(frozen=True)
class KernelTable:
    """Dense table ``K[i, j] = w_i w_j / |x_i - x_j|^(N + s p_ij)``, zero diagonal."""

    K: np.ndarray
    s: float

    @property
    def n(self) -> int:
        return self.K.shape[0]


def build_mesh(box: Box | Sequence[Sequence[float]], h: float) -> Mesh:
    """Uniform grid of cell centres with roughly spacing ``h``.

    Each axis of length ``L`` gets ``ceil(L / h)`` cells of width
    ``L / ceil(L / h)``, so the weights sum to the box volume exactly.
    """
    if not isinstance(box, Box):
        box = Box.from_extents(box)
    if box.dim not in (1, 2):
        raise ValueError(f"only dimensions 1 and 2 are supported, got {box.dim}")
    if not h > 0:
        raise ValueError(f"mesh spacing must be positive, got {h}")
    lengths = box.lengths
    if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
        raise EmptyMesh(f"box {box} has no interior")

    shape = tuple(max(1, math.ceil(L / h - 1e-12)) for L in lengths)
    spacing = tuple(float(L / m) for L, m in zip(lengths, shape))
    axes = [
        lo + (np.arange(m) + 0.5) * dx
        for lo, m, dx in zip(box.lower, shape, spacing)
    ]
    grid = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in grid], axis=1)
    weights = np.full(nodes.shape[0], float(np.prod(spacing)))
    return Mesh(box=box, shape=shape, nodes=nodes, weights=weights, h=float(max(spacing)),
                spacing=spacing)


def pairwise_distances(mesh: Mesh) -> np.ndarray:
    diff = mesh.nodes[:, None, :] - mesh.nodes[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def build_kernel(mesh: Mesh, s: float, field) -> KernelTable:
    """Off-diagonal kernel weights for the exponent field on ``mesh``."""
    if not 0.0 < s < 1.0:
        raise InvalidOrder(f"fractional order s must lie in (0, 1), got {s}")
    p = field.p
    if p.shape != (mesh.n, mesh.n):
        raise ValueError("exponent field was built on a different mesh")
    dist = pairwise_distances(mesh)
    off = ~np.eye(mesh.n, dtype=bool)
    K = np.zeros((mesh.n, mesh.n))
    ww = np.outer(mesh.weights, mesh.weights)
    K[off] = ww[off] / dist[off] ** (mesh.dim + s * p[off])
    # exact symmetry; the formula is symmetric but pow() need not round identically
    K = 0.5 * (K + K.T)
    return KernelTable(K=K, s=float(s))
