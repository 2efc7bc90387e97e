"""Drivers for the steady, time-fractional, and coupled model problems.

Three entry points share the assembly and least-squares layers:

``solve_model``
    Steady reaction-diffusion u - nu Lap(u) = f with Dirichlet or Neumann
    data, pointwise collocation rows or control-volume rows.
``solve_tfpde``
    D^alpha u = nu Lap(u) + f(u) + g, semi-implicit: the stacked matrix
    [(w0 + kappa tau^alpha) A - nu tau^alpha S; lam A_b; sqrt(delta) I]
    is factored once and every step assembles one reduced right-hand side
    from the coefficient history plus a back-substitution.
``solve_coupled``
    Two fields with separate orders (alpha, beta) on an inner domain and
    the surrounding annular region, glued by interface continuity and
    flux rows inside one joint least-squares unknown [d; d_hat].

The first few steps of a corrected quadrature reference later steps, so
the time drivers solve them together as one implicit block (see
``fractional.startup_matrix``) with a fixed-point loop around whatever is
nonlinear.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .assembly import (
    LsBlocks,
    assemble_collocation,
    assemble_dirichlet,
    assemble_fvm,
    assemble_interface,
    assemble_neumann,
    default_flux_penalty,
)
from .basis import interpolate
from .collocation import CollocationSet, build_collocation_set
from .fractional import cq_weights, e2_weights, starting_weights, startup_matrix
from .geometry import AnnularDomain, BoundarySamples, Domain
from .lsq import LsSolution, StackedFactorization, bootstrap_reference
from .meshing import BackgroundMesh, build_mesh

__all__ = [
    "InitialData",
    "SteadyProblem",
    "TimeProblem",
    "CoupledProblem",
    "SolveParams",
    "SteadyResult",
    "TimeResult",
    "CoupledResult",
    "solve_model",
    "solve_tfpde",
    "estimate_kappa",
    "solve_coupled",
]

PointFn = Callable[[np.ndarray], np.ndarray]
TimeFn = Callable[[np.ndarray, float], np.ndarray]
ReactFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class InitialData:
    """Initial field with optional analytic derivatives.

    Missing derivatives fall back to finite differences inside the nodal
    interpolation; pass them when a convergence study needs the starting
    interpolant at full accuracy.
    """

    value: PointFn
    dx: PointFn | None = None
    dy: PointFn | None = None
    dxy: PointFn | None = None


def _as_initial(obj: "InitialData | PointFn") -> InitialData:
    return obj if isinstance(obj, InitialData) else InitialData(obj)


@dataclass
class SteadyProblem:
    """u - nu Lap(u) = f with Dirichlet or flux data.

    ``boundary`` maps points to Dirichlet values; with bc = "neumann" it
    is called as boundary(points, normals) and returns the outward normal
    derivative data.
    """

    domain: Domain
    nu: float
    forcing: PointFn
    boundary: Callable
    bc: str = "dirichlet"
    exact: PointFn | None = None

    def __post_init__(self) -> None:
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary kind {self.bc!r}")
        if self.nu <= 0:
            raise ValueError("diffusion coefficient must be positive")


@dataclass
class TimeProblem:
    """D^alpha u = nu Lap(u) + f(u) + g with Dirichlet data.

    ``reaction`` is evaluated pointwise as f(u, pts, t); ``source`` as
    g(pts, t); ``boundary`` as u_b(pts, t). ``reaction_deriv`` (df/du)
    feeds the stabilization-shift estimate, nothing else.
    """

    domain: Domain
    alpha: float
    nu: float
    initial: "InitialData | PointFn"
    boundary: TimeFn
    source: TimeFn | None = None
    reaction: ReactFn | None = None
    reaction_deriv: ReactFn | None = None
    exact: TimeFn | None = None

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("order must lie in (0, 1]")
        if self.nu <= 0:
            raise ValueError("diffusion coefficient must be positive")


@dataclass
class CoupledProblem:
    """Two diffusion fields joined across the inner domain's boundary.

    u of order alpha lives on ``inner``; v of order beta lives on the
    annular region between ``inner`` and the outer loop. v carries
    Dirichlet data on the outer loop; on the shared interface the fields
    match in value and normal flux. Both coupled examples are linear, so
    there is no reaction term and no stabilization shift here.
    """

    inner: Domain
    outer: AnnularDomain
    alpha: float
    beta: float
    mu: float
    nu: float
    initial_u: "InitialData | PointFn"
    initial_v: "InitialData | PointFn"
    outer_boundary: TimeFn
    source_u: TimeFn | None = None
    source_v: TimeFn | None = None
    exact_u: TimeFn | None = None
    exact_v: TimeFn | None = None


@dataclass
class SolveParams:
    """Discretization and regularization knobs shared by every driver.

    r selects the time-loop reference vector: 0 pulls toward zero, 1
    toward the previous step's coefficients. eps perturbs the steady
    bootstrap reference; seed fixes that perturbation. tau and n_steps
    are required by the time drivers only.
    """

    n_x: int
    n_y: int
    p: int = 10
    q: int = 10
    mode: str = "nonuniform"
    n_b: int | None = None
    placement: str = "midpoint"
    lam: float = 1e5
    delta: float = 0.01
    eps: float = 0.0
    r: int = 1
    seed: int = 1
    path: str = "qr"
    fvm: bool = False
    rho: float = 1e-4
    n_flux: int = 8
    tau: float | None = None
    n_steps: int | None = None
    m: int = 1
    m_u: int | None = None
    m_f: int | None = None
    gammas: tuple[float, ...] | None = None
    kappa: float = 0.0
    n_c: int | None = None

    def __post_init__(self) -> None:
        if self.r not in (0, 1):
            raise ValueError("reference rule r must be 0 or 1")
        if self.delta < 0:
            raise ValueError("regularization weight must be nonnegative")
        if self.path not in ("qr", "kkt", "normal"):
            raise ValueError(f"unknown solver path {self.path!r}")
        if self.placement not in ("midpoint", "node"):
            raise ValueError(f"unknown boundary placement {self.placement!r}")

    def _require_time(self) -> tuple[float, int]:
        if self.tau is None or self.n_steps is None:
            raise ValueError("time stepping needs tau and n_steps")
        if self.tau <= 0 or self.n_steps < 1:
            raise ValueError("tau must be positive and n_steps at least 1")
        return self.tau, self.n_steps


@dataclass
class SteadyResult:
    mesh: BackgroundMesh
    collocation: CollocationSet
    blocks: LsBlocks
    solution: LsSolution
    fvm_fallbacks: int = 0


@dataclass
class TimeResult:
    """One trajectory: coeffs[n] are the spline coefficients at t = n tau.

    The full history is kept in memory (the fractional memory term needs
    it anyway); footprint is (n_steps+1) * n_dofs doubles.
    """

    mesh: BackgroundMesh
    collocation: CollocationSet
    times: np.ndarray
    coeffs: np.ndarray
    last_solution: LsSolution | None
    residual_boundary: np.ndarray
    startup_iterations: int


@dataclass
class CoupledResult:
    mesh_u: BackgroundMesh
    mesh_v: BackgroundMesh
    collocation_u: CollocationSet
    collocation_v: CollocationSet
    interface: BoundarySamples
    times: np.ndarray
    coeffs_u: np.ndarray
    coeffs_v: np.ndarray
    last_solution: LsSolution | None
    residual_boundary: np.ndarray
    startup_iterations: int


def _eval_samples(fn, pts: np.ndarray, t: float | None = None) -> np.ndarray:
    """Evaluate point data, broadcasting scalar-valued callables."""
    out = fn(pts) if t is None else fn(pts, t)
    out = np.asarray(out, dtype=float)
    if out.ndim == 0:
        out = np.full(len(pts), float(out))
    return out


# -- steady -------------------------------------------------------------


def steady_blocks(
    problem: SteadyProblem, params: SolveParams
) -> tuple[BackgroundMesh, CollocationSet, LsBlocks]:
    """Assemble the steady stacked system without solving it.

    Used by the solver below and by the conditioning diagnostics, which
    need the stacked matrix of configurations too singular to solve.
    The reference vector is left at zero.
    """
    mesh = build_mesh(problem.domain, params.n_x, params.n_y)
    colloc = build_collocation_set(
        mesh, params.p, params.q, params.mode, params.n_b,
        placement=params.placement,
    )
    pts = colloc.interior
    fallbacks = 0
    if problem.bc == "dirichlet":
        if params.fvm:
            A_in, S_in, fallbacks = assemble_fvm(
                mesh, pts, params.rho, params.n_flux, colloc.cells
            )
        else:
            A_in, S_in = assemble_collocation(mesh, pts, colloc.cells)
        A_b = assemble_dirichlet(mesh, colloc.boundary)
        f_in = _eval_samples(problem.forcing, pts)
        u_b = _eval_samples(problem.boundary, colloc.boundary.points)
    else:
        if params.fvm:
            raise ValueError("control-volume rows support Dirichlet data only")
        if params.path == "kkt":
            raise ValueError("flux data has no constraint rows for the kkt path")
        A_in, S_in = assemble_collocation(mesh, pts, colloc.cells)
        lam_t = default_flux_penalty(mesh)
        bpts = colloc.boundary.points
        nb_rows = assemble_neumann(mesh, colloc.boundary, problem.nu, lam_t)
        # flux rows join the unweighted block: stack zero Laplacian rows so
        # the shared interior operator A - nu S leaves them untouched
        A_in = sparse.vstack([A_in, nb_rows], format="csr")
        S_in = sparse.vstack(
            [S_in, sparse.csr_matrix((nb_rows.shape[0], mesh.n_dofs))],
            format="csr",
        )
        flux_data = np.asarray(
            problem.boundary(bpts, colloc.boundary.normals), dtype=float
        )
        f_in = np.concatenate(
            [
                _eval_samples(problem.forcing, pts),
                _eval_samples(problem.forcing, bpts) - lam_t * flux_data,
            ]
        )
        A_b = sparse.csr_matrix((0, mesh.n_dofs))
        u_b = np.zeros(0)

    blocks = LsBlocks(
        A_in=A_in,
        S_in=S_in,
        A_b=A_b,
        f_in=f_in,
        u_b=u_b,
        nu=problem.nu,
        lam=params.lam,
        delta=params.delta,
        d_star=np.zeros(mesh.n_dofs),
        mode_tag="fvm" if params.fvm else "lsc",
    )
    blocks.fvm_fallbacks = fallbacks
    return mesh, colloc, blocks


def solve_model(problem: SteadyProblem, params: SolveParams) -> SteadyResult:
    """Assemble and solve the steady model problem.

    With delta > 0 the reference vector comes from the bootstrap pipeline:
    a lightly regularized pilot solve, optionally perturbed by eps with
    the seeded generator, feeds the final solve at the requested delta.
    """
    mesh, colloc, blocks = steady_blocks(problem, params)
    if params.delta > 0:
        d_star = bootstrap_reference(blocks, eps=params.eps, seed=params.seed)
        blocks.d_star = d_star
    solution = StackedFactorization(blocks, params.path).solve()
    return SteadyResult(mesh, colloc, blocks, solution, blocks.fvm_fallbacks)


# -- shared time-stepping pieces ------------------------------------------


class _NormalSolver:
    """splu of B^T B plus refinement: one factorization, many solves.

    Corrected semi-normal equations keep full accuracy as long as
    cond(B)^2 * eps stays below one, which the regularization weight
    guarantees on the problems this backs (start-up blocks).
    """

    def __init__(self, B: sparse.csr_matrix):
        self.B = B.tocsr()
        try:
            self.lu = splu((self.B.T @ self.B).tocsc())
        except RuntimeError as exc:
            raise RuntimeError("start-up normal matrix is singular") from exc

    def solve(self, b: np.ndarray, refine: int = 8) -> np.ndarray:
        x = self.lu.solve(self.B.T @ b)
        for _ in range(refine):
            dx = self.lu.solve(self.B.T @ (b - self.B @ x))
            x = x + dx
            if np.linalg.norm(dx) <= 1e-14 * max(np.linalg.norm(x), 1e-300):
                break
        return x


def _startup_interior(
    fields: list[tuple[np.ndarray, sparse.csr_matrix, sparse.csr_matrix, float]],
    n0: int,
) -> sparse.csr_matrix:
    """Interior rows of the coupled start-up block over [dz^1; ...; dz^n0].

    fields lists (g_time, A, S, nu_ta) per field; entry (n, j) applies
    g[n, j] A, minus nu_ta S on the diagonal where the Laplacian is
    implicit.
    """
    rows = []
    for n in range(1, n0 + 1):
        row = []
        for j in range(1, n0 + 1):
            blk = []
            for g, A, S, nu_ta in fields:
                part = g[n - 1, j - 1] * A
                if j == n and nu_ta != 0.0:
                    part = part - nu_ta * S
                blk.append(part)
            row.append(sparse.block_diag(blk) if len(blk) > 1 else blk[0])
        rows.append(row)
    return sparse.bmat(rows, format="csr")


def _startup_stack(
    B_int: sparse.csr_matrix,
    A_b: sparse.csr_matrix,
    lam: float,
    delta: float,
    n0: int,
    n_dofs: int,
) -> sparse.csr_matrix:
    rows = [B_int, sparse.block_diag([lam * A_b] * n0)]
    if delta > 0:
        rows.append(np.sqrt(delta) * sparse.identity(n0 * n_dofs))
    return sparse.vstack(rows, format="csr")


# -- time-fractional single field ------------------------------------------


def solve_tfpde(problem: TimeProblem, params: SolveParams) -> TimeResult:
    """Integrate the semi-implicit scheme over n_steps of size tau.

    The reaction enters through corrected two-step extrapolation braced by
    the kappa shift; the memory term is a direct weighted sum over the
    stored coefficient increments (one history matvec per step). Steps up
    to n0 = max(m, m_u, m_f, 1) are solved together, fully implicitly,
    with a fixed-point loop around the reaction.
    """
    tau, n_steps = params._require_time()
    alpha, nu, kappa = problem.alpha, problem.nu, params.kappa
    m = params.m
    m_u = m if params.m_u is None else params.m_u
    m_f = m if params.m_f is None else params.m_f
    mmax = max(m, m_u, m_f)
    gammas = params.gammas
    if gammas is None:
        gammas = tuple(alpha * k for k in range(1, mmax + 1))
    if len(gammas) < mmax:
        raise ValueError("need at least max(m, m_u, m_f) correction exponents")
    ta = tau**alpha

    mesh = build_mesh(problem.domain, params.n_x, params.n_y)
    colloc = build_collocation_set(
        mesh, params.p, params.q, params.mode, params.n_b,
        placement=params.placement,
    )
    pts, bpts = colloc.interior, colloc.boundary.points
    A_in, S_in = assemble_collocation(mesh, pts, colloc.cells)
    A_b = assemble_dirichlet(mesh, colloc.boundary)
    n_dofs = mesh.n_dofs

    omega = cq_weights(alpha, n_steps)
    w_a = starting_weights(alpha, tuple(gammas[:m]), n_steps)
    w_u = e2_weights(tuple(gammas[:m_u]), n_steps)
    w_f = e2_weights(tuple(gammas[:m_f]), n_steps)

    init = _as_initial(problem.initial)
    d0 = interpolate(mesh, init.value, init.dx, init.dy, init.dxy)

    def f_of(u_pts: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros(len(pts))
        if problem.reaction is not None:
            out += problem.reaction(u_pts, pts, t)
        if problem.source is not None:
            out += _eval_samples(problem.source, pts, t)
        return out

    blocks = LsBlocks(
        A_in=((omega[0] + kappa * ta) * A_in).tocsr(),
        S_in=S_in,
        A_b=A_b,
        f_in=np.zeros(len(pts)),
        u_b=np.zeros(len(bpts)),
        nu=nu * ta,
        lam=params.lam,
        delta=params.delta,
        d_star=np.zeros(n_dofs),
    )
    # a time loop reuses one factorization for every step, which is the
    # regime where the sparse route beats a dense Q application
    fact = StackedFactorization(blocks, params.path, prefer_sparse=True)

    DU = np.zeros((n_steps + 1, n_dofs))  # increments d^n - d^0, row 0 zero
    res_b = np.zeros(n_steps + 1)
    delta_ = params.delta
    sqd = np.sqrt(delta_) if delta_ > 0 else 0.0
    n0 = min(max(m, m_u, m_f, 1), n_steps)

    # coupled fully implicit start-up
    g_time = startup_matrix(omega, w_a, n0, m)
    B_int = _startup_interior([(g_time, A_in, S_in, nu * ta)], n0)
    Bs = _startup_stack(B_int, A_b, params.lam, delta_, n0, n_dofs)
    ns = _NormalSolver(Bs)
    Sd0 = S_in @ d0
    ub_start = [_eval_samples(problem.boundary, bpts, n * tau) for n in range(1, n0 + 1)]
    bnd_base = [params.lam * (ub_start[n - 1] - A_b @ d0) for n in range(1, n0 + 1)]
    X = np.zeros(n0 * n_dofs)
    sweeps = 0
    for sweeps in range(1, 51):
        parts = []
        for n in range(1, n0 + 1):
            u_n = A_in @ (d0 + X[(n - 1) * n_dofs : n * n_dofs])
            parts.append(ta * f_of(u_n, n * tau) + nu * ta * Sd0)
        parts.extend(bnd_base)
        if delta_ > 0:
            for n in range(1, n0 + 1):
                if params.r == 1:
                    d_star = d0 if n == 1 else d0 + X[(n - 2) * n_dofs : (n - 1) * n_dofs]
                else:
                    d_star = np.zeros(n_dofs)
                parts.append(sqd * (d_star - d0))
        X_new = ns.solve(np.concatenate(parts))
        done = np.max(np.abs(X_new - X)) <= 1e-12 * max(1.0, np.max(np.abs(X_new)))
        X = X_new
        if done:
            break
    else:
        warnings.warn("start-up iteration hit its sweep cap", RuntimeWarning)
    for n in range(1, n0 + 1):
        DU[n] = X[(n - 1) * n_dofs : n * n_dofs]
        res_b[n] = float(np.linalg.norm(A_b @ (d0 + DU[n]) - ub_start[n - 1]))

    # reaction/source values: full prefix for the correction sums, two-step
    # ring for the extrapolation
    Fpre = np.zeros((m_f + 1, len(pts)))
    Fpre[0] = f_of(A_in @ d0, 0.0)
    for j in range(1, min(m_f, n_steps) + 1):
        Fpre[j] = f_of(A_in @ (d0 + DU[j]), j * tau)

    def f_at(k: int) -> np.ndarray:
        if k <= m_f:
            return Fpre[k]
        return f_of(A_in @ (d0 + DU[k]), k * tau)

    f_prev1 = f_at(n0)
    f_prev2 = f_at(n0 - 1)

    last_solution: LsSolution | None = None
    zeros_ref = np.zeros(n_dofs)
    for n in range(n0 + 1, n_steps + 1):
        t_n = n * tau
        v = (omega[0] + kappa * ta) * d0 - omega[1:n][::-1] @ DU[1:n]
        if m:
            v -= w_a[n] @ DU[1 : m + 1]
        if kappa:
            uxtr = 2.0 * DU[n - 1] - DU[n - 2]
            if m_u:
                uxtr = uxtr + w_u[n] @ DU[1 : m_u + 1]
            v += kappa * ta * uxtr
        fxtr = 2.0 * f_prev1 - f_prev2
        if m_f:
            fxtr = fxtr + w_f[n] @ (Fpre[1:] - Fpre[0])
        rhs = A_in @ v + ta * fxtr
        ub_n = _eval_samples(problem.boundary, bpts, t_n)
        d_star = d0 + DU[n - 1] if params.r == 1 else zeros_ref
        try:
            sol = fact.solve(f_in=rhs, u_b=ub_n, d_star=d_star)
        except RuntimeError as exc:
            raise RuntimeError(f"time step {n}: {exc}") from exc
        DU[n] = sol.c - d0
        res_b[n] = sol.residual_boundary
        f_prev2 = f_prev1
        f_prev1 = f_of(A_in @ sol.c, t_n)
        last_solution = sol

    return TimeResult(
        mesh=mesh,
        collocation=colloc,
        times=tau * np.arange(n_steps + 1),
        coeffs=DU + d0,
        last_solution=last_solution,
        residual_boundary=res_b,
        startup_iterations=sweeps,
    )


def estimate_kappa(problem: TimeProblem, coarse: SolveParams) -> float:
    """Bound the stabilization shift from a coarse fully implicit run.

    Runs the plain (uncorrected) quadrature with the reaction implicit at
    every step, tracks max |df/du| along the trajectory, and returns
    0.75 * that times a 1.5 safety factor. A reaction without an analytic
    derivative is differenced. If the per-step iteration fails to settle,
    the user-supplied coarse.kappa is returned unchanged.
    """
    if problem.reaction is None:
        return 0.0
    tau, n_steps = coarse._require_time()
    alpha, nu = problem.alpha, problem.nu
    ta = tau**alpha

    if problem.reaction_deriv is not None:
        deriv = problem.reaction_deriv
    else:

        def deriv(u: np.ndarray, pts: np.ndarray, t: float) -> np.ndarray:
            h = 1e-6 * (1.0 + np.abs(u))
            return (
                problem.reaction(u + h, pts, t) - problem.reaction(u - h, pts, t)
            ) / (2 * h)

    mesh = build_mesh(problem.domain, coarse.n_x, coarse.n_y)
    colloc = build_collocation_set(mesh, coarse.p, coarse.q, coarse.mode, coarse.n_b)
    pts, bpts = colloc.interior, colloc.boundary.points
    A_in, S_in = assemble_collocation(mesh, pts, colloc.cells)
    A_b = assemble_dirichlet(mesh, colloc.boundary)
    omega = cq_weights(alpha, n_steps)

    init = _as_initial(problem.initial)
    d0 = interpolate(mesh, init.value, init.dx, init.dy, init.dxy)
    blocks = LsBlocks(
        A_in=(omega[0] * A_in).tocsr(),
        S_in=S_in,
        A_b=A_b,
        f_in=np.zeros(len(pts)),
        u_b=np.zeros(len(bpts)),
        nu=nu * ta,
        lam=coarse.lam,
        delta=coarse.delta,
        d_star=np.zeros(mesh.n_dofs),
    )
    fact = StackedFactorization(blocks, "qr", prefer_sparse=True)

    def source_at(t: float) -> np.ndarray:
        if problem.source is None:
            return np.zeros(len(pts))
        return _eval_samples(problem.source, pts, t)

    DU = np.zeros((n_steps + 1, mesh.n_dofs))
    max_slope = float(np.max(np.abs(deriv(A_in @ d0, pts, 0.0))))
    c_prev = d0
    for n in range(1, n_steps + 1):
        t_n = n * tau
        v = omega[0] * d0 - omega[1:n][::-1] @ DU[1:n]
        base = A_in @ v + ta * source_at(t_n)
        ub_n = _eval_samples(problem.boundary, bpts, t_n)
        c = c_prev
        settled = False
        for _ in range(30):
            u_pts = A_in @ c
            sol = fact.solve(
                f_in=base + ta * problem.reaction(u_pts, pts, t_n),
                u_b=ub_n,
                d_star=c_prev if coarse.r == 1 else None,
            )
            shift = float(np.max(np.abs(sol.c - c)))
            c = sol.c
            if not np.all(np.isfinite(c)):
                break
            if shift <= 1e-10 * max(1.0, float(np.max(np.abs(c)))):
                settled = True
                break
        if not settled or not np.all(np.isfinite(c)):
            warnings.warn(
                "coarse implicit run did not settle; keeping the supplied shift",
                RuntimeWarning,
            )
            return coarse.kappa
        DU[n] = c - d0
        c_prev = c
        max_slope = max(max_slope, float(np.max(np.abs(deriv(A_in @ c, pts, t_n)))))
    return 0.75 * 1.5 * max_slope


# -- coupled two-field system ----------------------------------------------


def solve_coupled(problem: CoupledProblem, params: SolveParams) -> CoupledResult:
    """Integrate the two-field system over one joint unknown [d; d_hat].

    Each field keeps its own quadrature and correction tables (orders
    alpha and beta, exponents k alpha and k beta); the spatial rows,
    outer Dirichlet rows, interface continuity and flux rows are stacked
    into a single least-squares matrix factored once. The coupled model
    has no reaction term, so no stabilization shift is used and the
    per-step right-hand side is linear in the history.
    """
    tau, n_steps = params._require_time()
    alpha, beta = problem.alpha, problem.beta
    mu, nu = problem.mu, problem.nu
    m = params.m
    ta_a = tau**alpha
    ta_b = tau**beta

    mesh_u = build_mesh(problem.inner, params.n_x, params.n_y)
    mesh_v = build_mesh(problem.outer, params.n_x, params.n_y)
    colloc_u = build_collocation_set(
        mesh_u, params.p, params.q, params.mode, params.n_b
    )
    colloc_v = build_collocation_set(
        mesh_v, params.p, params.q, params.mode, params.n_b
    )
    if params.n_c is None:
        interface = colloc_u.boundary
    else:
        interface = problem.inner.sample_boundary(params.n_c)
    pts_u, pts_v = colloc_u.interior, colloc_v.interior
    bpts = colloc_v.boundary.points

    A_u, S_u = assemble_collocation(mesh_u, pts_u, colloc_u.cells)
    A_v, S_v = assemble_collocation(mesh_v, pts_v, colloc_v.cells)
    A_bv = assemble_dirichlet(mesh_v, colloc_v.boundary)
    try:
        cont, flux = assemble_interface(mesh_u, mesh_v, interface)
    except ValueError as exc:
        raise ValueError(f"interface samples not covered by both meshes: {exc}") from exc
    M_u, M_v = mesh_u.n_dofs, mesh_v.n_dofs
    M_z = M_u + M_v
    n_c = len(interface.points)

    omega_a = cq_weights(alpha, n_steps)
    omega_b = cq_weights(beta, n_steps)
    g_a = tuple(alpha * k for k in range(1, m + 1))
    g_b = tuple(beta * k for k in range(1, m + 1))
    w_a = starting_weights(alpha, g_a, n_steps)
    w_b = starting_weights(beta, g_b, n_steps)

    init_u, init_v = _as_initial(problem.initial_u), _as_initial(problem.initial_v)
    d0_u = interpolate(mesh_u, init_u.value, init_u.dx, init_u.dy, init_u.dxy)
    d0_v = interpolate(mesh_v, init_v.value, init_v.dx, init_v.dy, init_v.dxy)
    z0 = np.concatenate([d0_u, d0_v])

    A_in = sparse.block_diag([omega_a[0] * A_u, omega_b[0] * A_v], format="csr")
    S_in = sparse.block_diag([mu * ta_a * S_u, nu * ta_b * S_v], format="csr")
    A_bz = sparse.vstack(
        [
            sparse.hstack([sparse.csr_matrix((A_bv.shape[0], M_u)), A_bv]),
            cont,
            flux,
        ],
        format="csr",
    )
    blocks = LsBlocks(
        A_in=A_in,
        S_in=S_in,
        A_b=A_bz,
        f_in=np.zeros(len(pts_u) + len(pts_v)),
        u_b=np.zeros(A_bz.shape[0]),
        nu=1.0,
        lam=params.lam,
        delta=params.delta,
        d_star=np.zeros(M_z),
    )
    fact = StackedFactorization(blocks, params.path, prefer_sparse=True)

    def ub_vec(t: float) -> np.ndarray:
        return np.concatenate(
            [_eval_samples(problem.outer_boundary, bpts, t), np.zeros(2 * n_c)]
        )

    def rhs_sources(t: float) -> np.ndarray:
        su = (
            ta_a * _eval_samples(problem.source_u, pts_u, t)
            if problem.source_u is not None
            else np.zeros(len(pts_u))
        )
        sv = (
            ta_b * _eval_samples(problem.source_v, pts_v, t)
            if problem.source_v is not None
            else np.zeros(len(pts_v))
        )
        return np.concatenate([su, sv])

    DZ = np.zeros((n_steps + 1, M_z))
    res_b = np.zeros(n_steps + 1)
    delta_ = params.delta
    sqd = np.sqrt(delta_) if delta_ > 0 else 0.0
    n0 = min(max(m, 1), n_steps)

    gt_a = startup_matrix(omega_a, w_a, n0, m)
    gt_b = startup_matrix(omega_b, w_b, n0, m)
    B_int = _startup_interior(
        [(gt_a, A_u, S_u, mu * ta_a), (gt_b, A_v, S_v, nu * ta_b)], n0
    )
    Bs = _startup_stack(B_int, A_bz, params.lam, delta_, n0, M_z)
    ns = _NormalSolver(Bs)
    Sz0 = np.concatenate([mu * ta_a * (S_u @ d0_u), nu * ta_b * (S_v @ d0_v)])
    ub_start = [ub_vec(n * tau) for n in range(1, n0 + 1)]
    bnd_base = [params.lam * (ub_start[n - 1] - A_bz @ z0) for n in range(1, n0 + 1)]
    X = np.zeros(n0 * M_z)
    sweeps = 0
    for sweeps in range(1, 51):
        parts = [rhs_sources(n * tau) + Sz0 for n in range(1, n0 + 1)]
        parts.extend(bnd_base)
        if delta_ > 0:
            for n in range(1, n0 + 1):
                if params.r == 1:
                    z_star = z0 if n == 1 else z0 + X[(n - 2) * M_z : (n - 1) * M_z]
                else:
                    z_star = np.zeros(M_z)
                parts.append(sqd * (z_star - z0))
        X_new = ns.solve(np.concatenate(parts))
        done = np.max(np.abs(X_new - X)) <= 1e-12 * max(1.0, np.max(np.abs(X_new)))
        X = X_new
        if done:
            break
    else:
        warnings.warn("start-up iteration hit its sweep cap", RuntimeWarning)
    for n in range(1, n0 + 1):
        DZ[n] = X[(n - 1) * M_z : n * M_z]
        res_b[n] = float(np.linalg.norm(A_bz @ (z0 + DZ[n]) - ub_start[n - 1]))

    last_solution: LsSolution | None = None
    zeros_ref = np.zeros(M_z)
    for n in range(n0 + 1, n_steps + 1):
        t_n = n * tau
        v_u = omega_a[0] * d0_u - omega_a[1:n][::-1] @ DZ[1:n, :M_u]
        v_v = omega_b[0] * d0_v - omega_b[1:n][::-1] @ DZ[1:n, M_u:]
        if m:
            v_u = v_u - w_a[n] @ DZ[1 : m + 1, :M_u]
            v_v = v_v - w_b[n] @ DZ[1 : m + 1, M_u:]
        rhs = np.concatenate([A_u @ v_u, A_v @ v_v]) + rhs_sources(t_n)
        z_star = z0 + DZ[n - 1] if params.r == 1 else zeros_ref
        try:
            sol = fact.solve(f_in=rhs, u_b=ub_vec(t_n), d_star=z_star)
        except RuntimeError as exc:
            raise RuntimeError(f"time step {n}: {exc}") from exc
        DZ[n] = sol.c - z0
        res_b[n] = sol.residual_boundary
        last_solution = sol

    return CoupledResult(
        mesh_u=mesh_u,
        mesh_v=mesh_v,
        collocation_u=colloc_u,
        collocation_v=colloc_v,
        interface=interface,
        times=tau * np.arange(n_steps + 1),
        coeffs_u=DZ[:, :M_u] + d0_u,
        coeffs_v=DZ[:, M_u:] + d0_v,
        last_solution=last_solution,
        residual_boundary=res_b,
        startup_iterations=sweeps,
    )
