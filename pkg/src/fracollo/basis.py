"""Tensor-product cubic Hermite evaluation on a background mesh.

On the reference cell [0, 1] the four cubic Hermite shape functions are

    phi1 = 2s^3 - 3s^2 + 1      value at the left node
    phi2 = h (s^3 - 2s^2 + s)   slope at the left node
    phi3 = -2s^3 + 3s^2         value at the right node
    phi4 = h (s^3 - s^2)        slope at the right node

with h the physical cell width, so nodal slope DOFs are physical
derivatives and the piecewise field is C1 across cell faces. A field on
the mesh is determined by the coefficient vector ``c`` holding
(value, d/dx, d/dy, d2/dxdy) per active node.

``basis_rows`` builds sparse operator rows (one point per row, 16 nonzeros)
for the pointwise functionals used by the least-squares systems.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import sparse

from .meshing import BackgroundMesh, CellKind

__all__ = ["shape_1d", "basis_rows", "eval_field", "interpolate"]

ROW_KINDS = ("value", "dx", "dy", "dxx", "dyy", "lap", "dxxyy", "normal")


def shape_1d(s: np.ndarray, h: float, deriv: int = 0) -> np.ndarray:
    """(n, 4) shape-function table on the reference coordinate ``s``.

    ``deriv`` is the physical derivative order (0, 1 or 2); reference
    derivatives are rescaled by 1/h per order.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape + (4,))
    if deriv == 0:
        s2, s3 = s * s, s * s * s
        out[..., 0] = 2 * s3 - 3 * s2 + 1
        out[..., 1] = h * (s3 - 2 * s2 + s)
        out[..., 2] = -2 * s3 + 3 * s2
        out[..., 3] = h * (s3 - s2)
    elif deriv == 1:
        s2 = s * s
        out[..., 0] = (6 * s2 - 6 * s) / h
        out[..., 1] = 3 * s2 - 4 * s + 1
        out[..., 2] = (6 * s - 6 * s2) / h
        out[..., 3] = 3 * s2 - 2 * s
    elif deriv == 2:
        out[..., 0] = (12 * s - 6) / (h * h)
        out[..., 1] = (6 * s - 4) / h
        out[..., 2] = (6 - 12 * s) / (h * h)
        out[..., 3] = (6 * s - 2) / h
    else:
        raise ValueError(f"unsupported derivative order {deriv}")
    return out


def _reference_coords(
    mesh: BackgroundMesh,
    pts: np.ndarray,
    cells: tuple[np.ndarray, np.ndarray] | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    pts = np.asarray(pts, dtype=float)
    a, b, c, d = mesh.box
    tol = 1e-12 * max(b - a, d - c)
    if (
        pts[:, 0].min() < a - tol
        or pts[:, 0].max() > b + tol
        or pts[:, 1].min() < c - tol
        or pts[:, 1].max() > d + tol
    ):
        raise ValueError("evaluation point outside the background box")
    if cells is None:
        ix, iy = mesh.locate_cells(pts)
    else:
        ix, iy = (np.asarray(v, dtype=np.intp) for v in cells)
    sx = (pts[:, 0] - mesh.grid_x[ix]) / mesh.hx
    sy = (pts[:, 1] - mesh.grid_y[iy]) / mesh.hy
    return ix, iy, sx, sy


def _tensor_values(
    mesh: BackgroundMesh,
    sx: np.ndarray,
    sy: np.ndarray,
    kind: str,
    normals: np.ndarray | None,
) -> np.ndarray:
    """(n, 16) local values, layout l = 4*my + mx."""

    def tab(s: np.ndarray, h: float, deriv: int) -> np.ndarray:
        return shape_1d(s, h, deriv)

    hx, hy = mesh.hx, mesh.hy
    if kind == "value":
        vals = tab(sx, hx, 0)[:, None, :] * tab(sy, hy, 0)[:, :, None]
    elif kind == "dx":
        vals = tab(sx, hx, 1)[:, None, :] * tab(sy, hy, 0)[:, :, None]
    elif kind == "dy":
        vals = tab(sx, hx, 0)[:, None, :] * tab(sy, hy, 1)[:, :, None]
    elif kind == "dxx":
        vals = tab(sx, hx, 2)[:, None, :] * tab(sy, hy, 0)[:, :, None]
    elif kind == "dyy":
        vals = tab(sx, hx, 0)[:, None, :] * tab(sy, hy, 2)[:, :, None]
    elif kind == "lap":
        vals = (
            tab(sx, hx, 2)[:, None, :] * tab(sy, hy, 0)[:, :, None]
            + tab(sx, hx, 0)[:, None, :] * tab(sy, hy, 2)[:, :, None]
        )
    elif kind == "dxxyy":
        vals = tab(sx, hx, 2)[:, None, :] * tab(sy, hy, 2)[:, :, None]
    elif kind == "normal":
        if normals is None:
            raise ValueError("'normal' rows need the normals array")
        normals = np.asarray(normals, dtype=float)
        vals = (
            normals[:, 0, None, None]
            * tab(sx, hx, 1)[:, None, :]
            * tab(sy, hy, 0)[:, :, None]
            + normals[:, 1, None, None]
            * tab(sx, hx, 0)[:, None, :]
            * tab(sy, hy, 1)[:, :, None]
        )
    else:
        raise ValueError(f"unknown row kind {kind!r}, expected one of {ROW_KINDS}")
    return vals.reshape(len(sx), 16)


def basis_rows(
    mesh: BackgroundMesh,
    pts: np.ndarray,
    kind: str = "value",
    normals: np.ndarray | None = None,
    cells: tuple[np.ndarray, np.ndarray] | None = None,
) -> sparse.csr_matrix:
    """Sparse (n_points, n_dofs) matrix of the pointwise functional ``kind``.

    Points are attributed to cells by ``locate_cells`` unless explicit cell
    indices are passed (points on a shared face can then be evaluated from
    either side). Every target cell must be active.
    """
    pts = np.asarray(pts, dtype=float)
    ix, iy, sx, sy = _reference_coords(mesh, pts, cells)
    if np.any(mesh.kinds[ix, iy] == CellKind.OUTSIDE):
        bad = np.nonzero(mesh.kinds[ix, iy] == CellKind.OUTSIDE)[0][:3]
        raise ValueError(f"points in inactive cells, e.g. {pts[bad]}")
    data = _tensor_values(mesh, sx, sy, kind, normals)
    cols = mesh.cell_dofs(ix, iy)
    indptr = 16 * np.arange(len(pts) + 1)
    mat = sparse.csr_matrix(
        (data.ravel(), cols.ravel(), indptr), shape=(len(pts), mesh.n_dofs)
    )
    return mat


def eval_field(
    mesh: BackgroundMesh,
    coeffs: np.ndarray,
    pts: np.ndarray,
    kind: str = "value",
    normals: np.ndarray | None = None,
    cells: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Evaluate a coefficient vector at points without materializing rows."""
    pts = np.asarray(pts, dtype=float)
    ix, iy, sx, sy = _reference_coords(mesh, pts, cells)
    data = _tensor_values(mesh, sx, sy, kind, normals)
    cols = mesh.cell_dofs(ix, iy)
    return np.einsum("nl,nl->n", data, coeffs[cols])


def interpolate(
    mesh: BackgroundMesh,
    value: Callable[[np.ndarray], np.ndarray],
    dx: Callable[[np.ndarray], np.ndarray] | None = None,
    dy: Callable[[np.ndarray], np.ndarray] | None = None,
    dxy: Callable[[np.ndarray], np.ndarray] | None = None,
    fd_step: float | None = None,
) -> np.ndarray:
    """Nodal Hermite interpolant of a callable.

    Missing derivative callables are replaced by central differences with
    step ``fd_step`` (default: 1e-6 times the mesh diameter), good enough
    for initial data; pass analytic derivatives when accuracy matters.
    """
    nodes = mesh.active_nodes()
    xy = mesh.node_coords(nodes)
    if fd_step is None:
        a, b, c, d = mesh.box
        fd_step = 1e-6 * float(np.hypot(b - a, d - c))
    h = fd_step

    def num_dx(p: np.ndarray) -> np.ndarray:
        e = np.array([h, 0.0])
        return (value(p + e) - value(p - e)) / (2 * h)

    def num_dy(p: np.ndarray) -> np.ndarray:
        e = np.array([0.0, h])
        return (value(p + e) - value(p - e)) / (2 * h)

    dx = dx or num_dx
    dy = dy or num_dy
    if dxy is None:
        base_dy = dy

        def dxy(p: np.ndarray) -> np.ndarray:
            e = np.array([h, 0.0])
            return (base_dy(p + e) - base_dy(p - e)) / (2 * h)

    coeffs = np.empty(mesh.n_dofs)
    coeffs[0::4] = value(xy)
    coeffs[1::4] = dx(xy)
    coeffs[2::4] = dy(xy)
    coeffs[3::4] = dxy(xy)
    return coeffs
