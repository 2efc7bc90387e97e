"""Sparse row blocks for the least-squares systems.

Interior residual rows enforce the PDE at collocation points, either
pointwise (value and Laplacian rows) or through flux balances over small
circular control volumes. Boundary rows enforce Dirichlet data directly,
or the PDE-plus-penalized-flux combination for Neumann data. Interface
rows tie two coefficient fields together across a shared curve.

Everything is assembled once per mesh; time stepping only changes
right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .basis import basis_rows
from .geometry import BoundarySamples
from .meshing import BackgroundMesh, CellKind

__all__ = [
    "LsBlocks",
    "assemble_collocation",
    "assemble_fvm",
    "assemble_dirichlet",
    "assemble_neumann",
    "assemble_interface",
    "default_flux_penalty",
]


@dataclass
class LsBlocks:
    """Blocks of one regularized least-squares problem.

    The interior operator is ``A_in - nu*S_in``; the solved functional is

        || (A_in - nu S_in) d - f_in ||^2
        + lam^2 || A_b d - u_b ||^2  +  delta || d - d_star ||^2.
    """

    A_in: sparse.csr_matrix
    S_in: sparse.csr_matrix
    A_b: sparse.csr_matrix
    f_in: np.ndarray
    u_b: np.ndarray
    nu: float
    lam: float
    delta: float
    d_star: np.ndarray
    mode_tag: str = "lsc"
    fvm_fallbacks: int = 0

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("boundary weight must be positive")
        if self.delta < 0:
            raise ValueError("regularization weight must be nonnegative")

    @property
    def n_dofs(self) -> int:
        return self.A_in.shape[1]

    def interior_op(self) -> sparse.csr_matrix:
        op = self.A_in - self.nu * self.S_in if self.nu != 0 else self.A_in
        return op.tocsr()


def assemble_collocation(
    mesh: BackgroundMesh,
    pts: np.ndarray,
    cells: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Value rows A_in and Laplacian rows S_in at the interior points."""
    A_in = basis_rows(mesh, pts, "value", cells=cells)
    S_in = basis_rows(mesh, pts, "lap", cells=cells)
    return A_in, S_in


def assemble_fvm(
    mesh: BackgroundMesh,
    pts: np.ndarray,
    rho: float,
    n_flux: int = 8,
    cells: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[sparse.csr_matrix, sparse.csr_matrix, int]:
    """Control-volume rows (A_tilde, S_tilde) at the interior points.

    Each point carries a circle of radius ``rho``; A_tilde averages the
    field over the disk (value row plus (rho^2/8) Laplacian row) and
    S_tilde is the trapezoid-rule boundary flux

        (2 / (n_flux rho)) sum_r [cos(th_r) d/dx + sin(th_r) d/dy]

    sampled at the n_flux points on the circle. n_flux >= 6 integrates the
    flux of cubics exactly. Points whose circle leaves the active mesh
    fall back to plain collocation rows; the count of such rows is
    returned.
    """
    if n_flux < 6:
        raise ValueError("flux rule needs at least six points")
    if rho <= 0:
        raise ValueError("control-volume radius must be positive")
    pts = np.asarray(pts, dtype=float)
    n = len(pts)

    A_pt = basis_rows(mesh, pts, "value", cells=cells)
    S_pt = basis_rows(mesh, pts, "lap", cells=cells)

    theta = 2 * np.pi * np.arange(1, n_flux + 1) / n_flux
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])

    # A circle may leave the box or land in an outside cell; such rows
    # revert to the pointwise residual.
    a, b, c, d = mesh.box
    ok = np.ones(n, dtype=bool)
    shifted_cells = []
    for direction in dirs:
        q = pts + rho * direction
        inside_box = (
            (q[:, 0] >= a) & (q[:, 0] <= b) & (q[:, 1] >= c) & (q[:, 1] <= d)
        )
        ix, iy = mesh.locate_cells(np.clip(q, [a, c], [b, d]))
        shifted_cells.append((ix, iy))
        ok &= inside_box & (mesh.kinds[ix, iy] != CellKind.OUTSIDE)
    n_fallback = int(np.count_nonzero(~ok))
    good = np.nonzero(ok)[0]
    bad = np.nonzero(~ok)[0]

    w = 2.0 / (n_flux * rho)
    rows_l, cols_l, data_l = [], [], []
    for direction, (ix, iy) in zip(dirs, shifted_cells):
        q = pts[good] + rho * direction
        nrm = np.broadcast_to(direction, (len(good), 2))
        flux = basis_rows(mesh, q, "normal", normals=nrm, cells=(ix[good], iy[good]))
        rows_l.append(np.repeat(good, 16))
        cols_l.append(flux.indices)
        data_l.append(w * flux.data)
    if len(bad):
        # plain Laplacian rows for the clipped control volumes
        rows_l.append(np.repeat(bad, 16))
        cols_l.append(S_pt.indices.reshape(n, 16)[bad].ravel())
        data_l.append(S_pt.data.reshape(n, 16)[bad].ravel())
    S_t = sparse.coo_matrix(
        (np.concatenate(data_l), (np.concatenate(rows_l), np.concatenate(cols_l))),
        shape=(n, mesh.n_dofs),
    ).tocsr()

    keep = sparse.diags(ok.astype(float))
    A_t = (A_pt + (rho * rho / 8.0) * (keep @ S_pt)).tocsr()
    return A_t, S_t, n_fallback


def assemble_dirichlet(
    mesh: BackgroundMesh, samples: BoundarySamples
) -> sparse.csr_matrix:
    """Value rows at the boundary samples."""
    return basis_rows(mesh, samples.points, "value")


def assemble_neumann(
    mesh: BackgroundMesh,
    samples: BoundarySamples,
    nu: float,
    flux_penalty: float,
) -> sparse.csr_matrix:
    """Boundary rows for flux data: the PDE residual at the boundary point
    minus ``flux_penalty`` times the normal-derivative row.

    These rows join the interior (unweighted) block. The right-hand side
    entry is f(point) - flux_penalty * g(point) with g the normal flux
    data; that part is the caller's job since it needs the problem's f.
    """
    val = basis_rows(mesh, samples.points, "value")
    lap = basis_rows(mesh, samples.points, "lap")
    nrm = basis_rows(mesh, samples.points, "normal", normals=samples.normals)
    return (val - nu * lap - flux_penalty * nrm).tocsr()


def default_flux_penalty(mesh: BackgroundMesh) -> float:
    """Mesh-scaled penalty weight for Neumann rows."""
    a, b, c, d = mesh.box
    return 4.0 * max((b - a) * mesh.nx, (d - c) * mesh.ny)


def assemble_interface(
    mesh_u: BackgroundMesh,
    mesh_v: BackgroundMesh,
    samples: BoundarySamples,
) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Continuity and flux-matching rows over the stacked unknown [d; d_hat].

    Continuity row: [value-row on mesh_u, -value-row on mesh_v];
    flux row: the same with normal-derivative rows. Both fields must be
    evaluable at every sample.
    """
    cu = basis_rows(mesh_u, samples.points, "value")
    cv = basis_rows(mesh_v, samples.points, "value")
    fu = basis_rows(mesh_u, samples.points, "normal", normals=samples.normals)
    fv = basis_rows(mesh_v, samples.points, "normal", normals=samples.normals)
    cont = sparse.hstack([cu, -cv], format="csr")
    flux = sparse.hstack([fu, -fv], format="csr")
    return cont, flux
