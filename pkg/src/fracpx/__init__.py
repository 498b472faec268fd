"""Variable-exponent modulars and norms, a nonlocal p(x, y)-Laplacian Dirichlet
solver (energy descent, damped Picard, continuation) and Brouwer degree checks
in one and two dimensions."""

__version__ = "0.1.0"

from .exponents import ExponentField, ExponentOutOfRange, build_exponents, conjugate
from .mesh import Box, EmptyMesh, InvalidOrder, KernelTable, Mesh, build_kernel, build_mesh
from .modular import (
    BracketFailure,
    NormReport,
    check_prop1,
    check_prop2,
    gagliardo_norm,
    lebesgue_norm,
    luxemburg,
    modular_gagliardo,
    modular_lebesgue,
)
from .operators import (
    NoConvergence,
    ProblemData,
    apply_L,
    apply_S,
    apply_T,
    energy,
    energy_gradient,
    weak_residual,
)
from .solver import (
    ContinuationStall,
    Diverged,
    SolveReport,
    SolverConfig,
    lambda_sweep,
    solve,
    solve_continuation,
    solve_minimize,
    solve_picard,
    verify_apriori,
)
from .degree import (
    BoundaryHit,
    DegreeProblem,
    RefinementLimit,
    degree,
    degree_1d,
    degree_2d,
    verify_homotopy_invariance,
)
