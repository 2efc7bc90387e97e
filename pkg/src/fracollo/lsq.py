"""Regularized least-squares solvers for the stacked collocation systems.

Three interchangeable paths solve

    min || B d - f ||^2 + lam^2 || A_b d - u_b ||^2 + delta || d - d_star ||^2

with B the interior operator:

* ``qr``     - orthogonal factorization of the stacked matrix
               [B; lam A_b; sqrt(delta) I]. Dense Householder QR when the
               stack fits in memory, otherwise corrected normal equations
               (sparse Cholesky-type factorization plus iterative
               refinement with the true sparse residual, which restores
               QR-level accuracy while keeping memory sparse).
* ``kkt``    - the equality-constrained form: boundary rows become hard
               constraints with multipliers, solved as a sparse symmetric
               indefinite saddle system.
* ``normal`` - plain normal equations, kept as a baseline; loses digits
               once sigma_max^2/delta approaches 1/eps and says so.

Factorizations are reusable: the time-stepping loops factor once and
back-substitute thousands of right-hand sides.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh, splu

from .assembly import LsBlocks

__all__ = [
    "LsSolution",
    "StackedFactorization",
    "solve_penalized",
    "solve_kkt",
    "solve_normal",
    "smallest_singular_values",
    "bootstrap_reference",
]

# dense QR is used while the stacked matrix copy stays below this
DENSE_QR_BUDGET_BYTES = 1.3e9
DENSE_SVD_MAX_DOFS = 5000


@dataclass
class LsSolution:
    """Coefficients plus the residuals and diagnostics of one solve."""

    c: np.ndarray
    residual_interior: float
    residual_boundary: float
    path: str
    multipliers: np.ndarray | None = None
    sigma_min: float | None = None
    sigma_max: float | None = None
    refine_steps: int = 0
    rank_deficient: bool = False


def _stacked_matrix(blocks: LsBlocks) -> sparse.csr_matrix:
    rows = [blocks.interior_op(), blocks.lam * blocks.A_b]
    if blocks.delta > 0:
        rows.append(np.sqrt(blocks.delta) * sparse.identity(blocks.n_dofs))
    return sparse.vstack(rows, format="csr")


def _stacked_rhs(
    blocks: LsBlocks,
    f_in: np.ndarray,
    u_b: np.ndarray,
    d_star: np.ndarray | None,
) -> np.ndarray:
    parts = [f_in, blocks.lam * u_b]
    if blocks.delta > 0:
        if d_star is None:
            d_star = blocks.d_star
        parts.append(np.sqrt(blocks.delta) * d_star)
    return np.concatenate(parts)


class StackedFactorization:
    """One factorization of a regularized LS problem, many right-hand sides.

    ``path`` selects the algorithm; the data vectors passed to ``solve``
    may differ from the ones stored in ``blocks`` (the time loops exploit
    this), but the matrices, weights and delta are fixed at construction.

    ``prefer_sparse`` routes the qr path through the corrected normal
    equations even when a dense factor would fit in memory. A dense Q
    application is memory bound and costs as much as the whole sparse
    solve on every call, so callers that reuse one factorization for
    thousands of right-hand sides want this; accuracy stays within the
    refinement tolerance of the dense answer.
    """

    def __init__(
        self,
        blocks: LsBlocks,
        path: str = "qr",
        prefer_sparse: bool = False,
    ) -> None:
        if path not in ("qr", "kkt", "normal"):
            raise ValueError(f"unknown solver path {path!r}")
        self.blocks = blocks
        self.path = path
        self._prefer_sparse = bool(prefer_sparse)
        self._op = blocks.interior_op()
        if path == "qr":
            self._init_qr()
        elif path == "kkt":
            self._init_kkt()
        else:
            self._init_normal()

    # -- qr -----------------------------------------------------------

    def _init_qr(self) -> None:
        B = _stacked_matrix(self.blocks)
        self._B = B
        n_rows, m = B.shape
        if not self._prefer_sparse and n_rows * m * 8 <= DENSE_QR_BUDGET_BYTES:
            self._qr_dense = True
            A = B.toarray()
            A = np.asfortranarray(A)
            qr, tau, work, info = linalg.lapack.dgeqrf(A, overwrite_a=1)
            if info != 0:
                raise RuntimeError(f"QR factorization failed (info={info})")
            self._qr, self._tau = qr, tau
            diag = np.abs(np.diag(qr[:m, :m]))
            self.rank_deficient = bool(
                diag.min() <= 1e-13 * max(diag.max(), 1e-300)
            )
            if self.rank_deficient and self.blocks.delta == 0:
                # keep a dense copy so minimum-norm solves stay possible
                self._dense_B = B.toarray()
            # workspace query for the Q application
            _, lw, info = linalg.lapack.dormqr(
                "L", "T", qr, tau, np.zeros((n_rows, 1)), -1
            )
            self._lwork = int(lw[0].real) if np.ndim(lw) else int(lw)
        else:
            self._qr_dense = False
            self._init_csne()

    def _init_csne(self) -> None:
        B = self._B
        G = (B.T @ B).tocsc()
        try:
            self._lu = splu(G)
        except RuntimeError as exc:
            raise RuntimeError(
                "normal matrix of the stacked system is singular; "
                "increase delta or use the kkt path"
            ) from exc
        self.rank_deficient = False

    def _solve_qr(self, b: np.ndarray) -> tuple[np.ndarray, int]:
        m = self.blocks.n_dofs
        if self._qr_dense:
            if self.rank_deficient and self.blocks.delta == 0:
                x, *_ = np.linalg.lstsq(self._dense_B, b, rcond=None)
                return x, 0
            c = np.asfortranarray(b.reshape(-1, 1))
            cq, work, info = linalg.lapack.dormqr(
                "L", "T", self._qr, self._tau, c, self._lwork, overwrite_c=1
            )
            if info != 0:
                raise RuntimeError(f"applying Q failed (info={info})")
            y = cq[:m, 0]
            x = linalg.solve_triangular(self._qr[:m, :m], y, lower=False)
            return x, 0
        # corrected normal equations with sparse-residual refinement
        B = self._B
        x = self._lu.solve(B.T @ b)
        last = np.inf
        steps = 0
        for steps in range(1, 9):
            dx = self._lu.solve(B.T @ (b - B @ x))
            x += dx
            nd = float(np.linalg.norm(dx))
            if nd <= 1e-14 * max(float(np.linalg.norm(x)), 1e-300):
                break
            if nd > 0.5 * last:
                if nd > 1e-8 * np.linalg.norm(x):
                    warnings.warn(
                        "least-squares refinement stagnated; solution may "
                        "have reduced accuracy",
                        RuntimeWarning,
                    )
                break
            last = nd
        return x, steps

    # -- kkt ------------------------------------------------------------

    def _init_kkt(self) -> None:
        op, A_b = self._op, self.blocks.A_b
        n_in, m = op.shape
        n_b = A_b.shape[0]
        delta = self.blocks.delta
        K = sparse.bmat(
            [
                [sparse.identity(n_in), -op, None],
                [-op.T, -delta * sparse.identity(m), A_b.T],
                [None, A_b, None],
            ],
            format="csc",
        )
        try:
            self._lu = splu(K)
        except RuntimeError as exc:
            raise RuntimeError(
                "saddle system is singular: boundary rows are rank "
                "deficient or the interior block does not determine d"
            ) from exc
        self._K = K
        self._sizes = (n_in, m, n_b)
        self.rank_deficient = False

    def _solve_kkt(self, f_in, u_b, d_star) -> tuple[np.ndarray, np.ndarray, int]:
        n_in, m, n_b = self._sizes
        if d_star is None:
            d_star = self.blocks.d_star
        rhs = np.concatenate([-f_in, -self.blocks.delta * d_star, u_b])
        sol = self._lu.solve(rhs)
        sol += self._lu.solve(rhs - self._K @ sol)
        if not np.all(np.isfinite(sol)):
            raise RuntimeError("saddle solve produced non-finite values")
        return sol[n_in : n_in + m], sol[n_in + m :], 1

    # -- normal ----------------------------------------------------------

    def _init_normal(self) -> None:
        blocks = self.blocks
        op, A_b = self._op, blocks.A_b
        G = (op.T @ op + blocks.lam**2 * (A_b.T @ A_b)).tocsc()
        if blocks.delta > 0:
            G = (G + blocks.delta * sparse.identity(blocks.n_dofs)).tocsc()
        try:
            self._lu = splu(G)
        except RuntimeError as exc:
            raise RuntimeError("normal equations are numerically singular") from exc
        u_diag = np.abs(self._lu.U.diagonal())
        if u_diag.min() <= 1e-15 * u_diag.max():
            if blocks.delta == 0:
                raise RuntimeError("normal equations are numerically singular")
        norm_G = sparse.linalg.norm(G, 1)
        if blocks.delta > 0 and norm_G / blocks.delta > 1e12:
            warnings.warn(
                "normal-equation conditioning ~ sigma_max^2/delta exceeds "
                "1e12; expect accuracy loss relative to the qr path",
                RuntimeWarning,
            )
        self.rank_deficient = False

    # -- shared ----------------------------------------------------------

    def solve(
        self,
        f_in: np.ndarray | None = None,
        u_b: np.ndarray | None = None,
        d_star: np.ndarray | None = None,
    ) -> LsSolution:
        blocks = self.blocks
        f_in = blocks.f_in if f_in is None else f_in
        u_b = blocks.u_b if u_b is None else u_b
        multipliers = None
        steps = 0
        if self.path == "kkt":
            c, multipliers, steps = self._solve_kkt(f_in, u_b, d_star)
        elif self.path == "qr":
            b = _stacked_rhs(blocks, f_in, u_b, d_star)
            c, steps = self._solve_qr(b)
        else:
            op, A_b = self._op, blocks.A_b
            rhs = op.T @ f_in + blocks.lam**2 * (A_b.T @ u_b)
            if blocks.delta > 0:
                rhs = rhs + blocks.delta * (
                    blocks.d_star if d_star is None else d_star
                )
            c = self._lu.solve(rhs)
        if not np.all(np.isfinite(c)):
            raise RuntimeError(f"{self.path} solve produced non-finite values")
        return LsSolution(
            c=c,
            residual_interior=float(np.linalg.norm(self._op @ c - f_in)),
            residual_boundary=float(np.linalg.norm(blocks.A_b @ c - u_b)),
            path=self.path,
            multipliers=multipliers,
            refine_steps=steps,
            rank_deficient=getattr(self, "rank_deficient", False),
        )


def solve_penalized(blocks: LsBlocks, path: str = "qr") -> LsSolution:
    """Solve the penalized problem; ``path`` picks qr or normal."""
    return StackedFactorization(blocks, path).solve()


def solve_kkt(blocks: LsBlocks) -> LsSolution:
    """Solve the constrained form: boundary data enforced exactly."""
    return StackedFactorization(blocks, "kkt").solve()


def solve_normal(blocks: LsBlocks) -> LsSolution:
    return StackedFactorization(blocks, "normal").solve()


def smallest_singular_values(
    blocks: LsBlocks, k: int = 32
) -> tuple[np.ndarray, float]:
    """The k smallest singular values of the stacked matrix, ascending,
    plus the largest one. Dense SVD below DENSE_SVD_MAX_DOFS unknowns."""
    B = _stacked_matrix(blocks)
    m = B.shape[1]
    k = min(k, m)
    if m <= DENSE_SVD_MAX_DOFS:
        sv = np.linalg.svd(B.toarray(), compute_uv=False)
        return sv[::-1][:k].copy(), float(sv[0])
    G = (B.T @ B).tocsc()
    small = eigsh(G, k=k, sigma=0, which="LM", return_eigenvectors=False)
    large = eigsh(G, k=1, which="LM", return_eigenvectors=False)
    small = np.sqrt(np.clip(np.sort(small), 0, None))
    return small, float(np.sqrt(large[0]))


def bootstrap_reference(
    blocks: LsBlocks,
    eps: float = 0.0,
    seed: int = 1,
    delta0: float = 1e-6,
) -> np.ndarray:
    """Reference vector d_star for the regularization term.

    A lightly regularized solve (delta0, zero reference) gives a base
    vector d0; the returned reference is d0 * (1 + eps * r) with r a
    seeded uniform [0,1) perturbation, so accuracy studies can control
    how far the reference sits from the attainable solution.
    """
    base = replace(
        blocks, delta=delta0, d_star=np.zeros(blocks.n_dofs), mode_tag=blocks.mode_tag
    )
    d0 = StackedFactorization(base, "qr").solve().c
    if eps == 0.0:
        return d0
    rng = np.random.default_rng(seed)
    return d0 * (1.0 + eps * rng.random(blocks.n_dofs))
