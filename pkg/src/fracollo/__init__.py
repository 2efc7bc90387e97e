"""Regularized least-squares collocation on tensor-product cubic
Hermite splines, for steady and time-fractional PDEs on irregular
plane domains.

The pieces compose bottom-up: a background mesh over the domain's
bounding box (`meshing`), C^1 bicubic shape functions on its cells
(`basis`), interior/boundary sample sets whose density adapts to how
each cell meets the domain (`collocation`), sparse value/Laplacian/
flux rows (`assembly`), a three-path regularized least-squares layer
(`lsq`), convolution quadrature for the Caputo derivative
(`fractional`), and drivers that tie one problem to one trajectory
(`solver`).  `metrics`, `problems`, `config` and `cli` are the
benchmarking harness.
"""

from .assembly import LsBlocks
from .collocation import CollocationSet, build_collocation_set
from .fractional import (
    cq_weights,
    e2_weights,
    mittag_leffler,
    solve_fivp,
    starting_weights,
)
from .geometry import (
    AnnularDomain,
    BoundarySamples,
    Circle,
    Domain,
    PolylineBoundary,
    Rectangle,
    SplineBoundary,
)
from .lsq import (
    LsSolution,
    StackedFactorization,
    bootstrap_reference,
    smallest_singular_values,
    solve_kkt,
    solve_normal,
    solve_penalized,
)
from .meshing import BackgroundMesh, build_mesh
from .metrics import (
    ConvergenceRow,
    ErrorReport,
    convergence_study,
    export_field,
    fitted_order,
    l2_error,
)
from .problems import (
    coupled_decay_problem,
    coupled_domains,
    coupled_pulse_problem,
    disk_domain,
    domain_preset,
    eight_knot_domain,
    five_knot_domain,
    fractional_decay_problem,
    notched_polygon_domain,
    pulse_decay_problem,
    square_domain,
    steady_exp_problem,
)
from .solver import (
    CoupledProblem,
    CoupledResult,
    InitialData,
    SolveParams,
    SteadyProblem,
    SteadyResult,
    TimeProblem,
    TimeResult,
    estimate_kappa,
    solve_coupled,
    solve_model,
    solve_tfpde,
    steady_blocks,
)

__version__ = "0.1.0"

__all__ = [
    "AnnularDomain",
    "BackgroundMesh",
    "BoundarySamples",
    "Circle",
    "CollocationSet",
    "ConvergenceRow",
    "CoupledProblem",
    "CoupledResult",
    "Domain",
    "ErrorReport",
    "InitialData",
    "LsBlocks",
    "LsSolution",
    "PolylineBoundary",
    "Rectangle",
    "SolveParams",
    "SplineBoundary",
    "StackedFactorization",
    "SteadyProblem",
    "SteadyResult",
    "TimeProblem",
    "TimeResult",
    "bootstrap_reference",
    "build_collocation_set",
    "build_mesh",
    "convergence_study",
    "coupled_decay_problem",
    "coupled_domains",
    "coupled_pulse_problem",
    "cq_weights",
    "disk_domain",
    "domain_preset",
    "e2_weights",
    "eight_knot_domain",
    "estimate_kappa",
    "export_field",
    "fitted_order",
    "five_knot_domain",
    "fractional_decay_problem",
    "l2_error",
    "mittag_leffler",
    "notched_polygon_domain",
    "pulse_decay_problem",
    "smallest_singular_values",
    "solve_coupled",
    "solve_fivp",
    "solve_kkt",
    "solve_model",
    "solve_normal",
    "solve_penalized",
    "solve_tfpde",
    "square_domain",
    "starting_weights",
    "steady_blocks",
    "steady_exp_problem",
    "__version__",
]
