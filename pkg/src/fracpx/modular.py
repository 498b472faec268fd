"""Discrete modulars, Luxemburg norms and the modular/norm comparison checks.

Grid functions are plain float arrays of nodal values (length ``mesh.n``).
The discrete modulars below are taken as the definition of the discrete
spaces, so every comparison inequality between a modular and its Luxemburg
gauge holds exactly up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exponents import ExponentField
from .mesh import KernelTable, Mesh

__all__ = [
    "NormReport",
    "PropertyVerdict",
    "BracketFailure",
    "modular_lebesgue",
    "modular_gagliardo",
    "luxemburg",
    "lebesgue_norm",
    "gagliardo_norm",
    "check_prop1",
    "check_prop2",
]

DEFAULT_TOL = 1e-10
# bracket collapsed to a few ulps; used by the comparison checks
TIGHT_TOL = 1e-15
MAX_DOUBLINGS = 1000


class BracketFailure(RuntimeError):
    """The modular never crossed 1 while expanding the bracket."""


@dataclass
class NormReport:
    modular: float
    luxemburg: float
    bracket_low: float
    bracket_high: float
    iterations: int

    def __float__(self) -> float:
        return self.luxemburg


@dataclass
class PropertyVerdict:
    """Outcome of one batch of inequality checks.

    ``slacks`` maps each checked relation to its slack (nonnegative means the
    relation holds); slacks are scaled by ``max(1, |rhs|)``.
    """

    norm: float
    modular: float
    slacks: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-12

    @property
    def worst_slack(self) -> float:
        return min(self.slacks.values()) if self.slacks else float("inf")

    @property
    def passed(self) -> bool:
        return self.worst_slack >= -self.tol


def modular_lebesgue(u, expo, mesh: Mesh) -> float:
    """``sum_i w_i |u_i|^{expo_i}``."""
    u = np.asarray(u, dtype=float)
    return float(np.dot(mesh.weights, np.abs(u) ** expo))


def modular_gagliardo(u, kernel: KernelTable, field: ExponentField) -> float:
    """``sum_{i != j} K_ij |u_i - u_j|^{p_ij}`` over ordered pairs."""
    u = np.asarray(u, dtype=float)
    diff = np.abs(u[:, None] - u[None, :])
    return float(np.sum(kernel.K * diff ** field.p))


def luxemburg(modular_fn: Callable[[np.ndarray], float], u, tol: float = DEFAULT_TOL) -> NormReport:
    """Gauge ``inf{lam > 0 : modular(u / lam) <= 1}`` by bracketing and bisection.

    Stops once the bracket is narrower than ``tol * lam`` and the modular at
    the returned point is within ``tol`` of one, or when the bracket cannot
    be split further in floating point.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return NormReport(0.0, 0.0, 0.0, 0.0, 0)

    def rho(lam: float) -> float:
        return modular_fn(u / lam)

    its = 0
    lo = hi = 1.0
    m = rho(1.0)
    if m > 1.0:
        while m > 1.0:
            lo, hi = hi, 2.0 * hi
            m = rho(hi)
            its += 1
            if its > MAX_DOUBLINGS or not np.isfinite(hi):
                raise BracketFailure("modular stays above 1; it is probably not finite")
    else:
        while m <= 1.0:
            hi, lo = lo, 0.5 * lo
            m = rho(lo)
            its += 1
            if its > MAX_DOUBLINGS or lo == 0.0:
                raise BracketFailure("modular stays below 1 while shrinking lambda")

    # invariant: rho(lo) > 1 >= rho(hi)
    best, best_m = hi, rho(hi)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        m = rho(mid)
        its += 1
        if abs(m - 1.0) < abs(best_m - 1.0):
            best, best_m = mid, m
        if m > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * lo and abs(best_m - 1.0) <= tol:
            break
    for cand in (lo, hi):
        m = rho(cand)
        if abs(m - 1.0) < abs(best_m - 1.0):
            best, best_m = cand, m
    return NormReport(
        modular=best_m, luxemburg=best, bracket_low=lo, bracket_high=hi, iterations=its
    )


def lebesgue_norm(u, expo, mesh: Mesh, tol: float = DEFAULT_TOL) -> float:
    return luxemburg(lambda f: modular_lebesgue(f, expo, mesh), u, tol).luxemburg


def gagliardo_norm(u, kernel: KernelTable, field: ExponentField, tol: float = DEFAULT_TOL) -> float:
    """Gagliardo seminorm ``[u]``; a norm on functions vanishing on the Dirichlet layer."""
    return luxemburg(lambda f: modular_gagliardo(f, kernel, field), u, tol).luxemburg


def _sandwich_slacks(norm: float, rho: float, e_minus: float, e_plus: float) -> dict[str, float]:
    def rel(lhs, rhs):
        return (rhs - lhs) / max(1.0, abs(rhs), abs(lhs))

    slacks = {"sign_equivalence": (norm - 1.0) * (rho - 1.0)}
    if norm >= 1.0:
        slacks["upper_regime_low"] = rel(norm ** e_minus, rho)
        slacks["upper_regime_high"] = rel(rho, norm ** e_plus)
    if norm <= 1.0:
        slacks["lower_regime_low"] = rel(norm ** e_plus, rho)
        slacks["lower_regime_high"] = rel(rho, norm ** e_minus)
    return slacks


def check_prop1(u, expo, mesh: Mesh, tol: float = 1e-12) -> PropertyVerdict:
    """Lebesgue modular versus Luxemburg norm.

    Checks the sign equivalence of ``norm - 1`` and ``rho - 1``, the
    two-sided power sandwiches in the regimes ``norm >= 1`` and
    ``norm <= 1``, ``norm <= rho + 1`` and ``rho <= norm^{e-} + norm^{e+}``.
    """
    expo = np.broadcast_to(np.asarray(expo, dtype=float), (mesh.n,))
    rho = modular_lebesgue(u, expo, mesh)
    norm = luxemburg(lambda f: modular_lebesgue(f, expo, mesh), u, TIGHT_TOL).luxemburg
    e_minus, e_plus = float(expo.min()), float(expo.max())
    slacks = _sandwich_slacks(norm, rho, e_minus, e_plus)
    slacks["norm_le_modular_plus_one"] = (rho + 1.0 - norm) / max(1.0, rho + 1.0)
    upper = norm ** e_minus + norm ** e_plus
    slacks["modular_le_power_sum"] = (upper - rho) / max(1.0, upper)
    return PropertyVerdict(norm=norm, modular=rho, slacks=slacks, tol=tol)


def check_prop2(u, kernel: KernelTable, field: ExponentField, tol: float = 1e-12) -> PropertyVerdict:
    """Gagliardo modular versus the W0 norm: both power sandwiches."""
    rho = modular_gagliardo(u, kernel, field)
    norm = luxemburg(lambda f: modular_gagliardo(f, kernel, field), u, TIGHT_TOL).luxemburg
    slacks = _sandwich_slacks(norm, rho, field.p_minus, field.p_plus)
    return PropertyVerdict(norm=norm, modular=rho, slacks=slacks, tol=tol)
