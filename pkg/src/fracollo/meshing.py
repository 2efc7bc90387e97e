"""Background meshes over an embedding box and the active Hermite DOF map.

The domain is immersed in a rectangular box split into nx x ny uniform
cells. Each cell is classified by how the domain covers it:

* ``INTERIOR``  - cell lies entirely inside the domain,
* ``EDGE23``    - cut cell, two or three corners inside (also: all four
  corners inside but the boundary still crosses the cell),
* ``CORNER1``   - barely touched, one corner inside (also: no corner inside
  but a nonempty intersection),
* ``OUTSIDE``   - no intersection.

Corner containment uses the closed test, so a domain that coincides with
the box classifies every cell interior. Every node of a non-outside cell is
active and carries four degrees of freedom: value, d/dx, d/dy, d2/dxdy, in
that order, nodes numbered lexicographically by (ix, iy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Domain

__all__ = ["CellKind", "BackgroundMesh", "build_mesh"]


class CellKind:
    OUTSIDE = 0
    INTERIOR = 1
    EDGE23 = 2
    CORNER1 = 3


@dataclass
class BackgroundMesh:
    """Classified background mesh plus the active-DOF numbering."""

    domain: Domain
    grid_x: np.ndarray  # (nx+1,)
    grid_y: np.ndarray  # (ny+1,)
    kinds: np.ndarray  # (nx, ny) int8, CellKind values
    dof_lookup: np.ndarray  # (nx+1, ny+1, 4) int32, -1 where inactive
    n_dofs: int

    @property
    def nx(self) -> int:
        return len(self.grid_x) - 1

    @property
    def ny(self) -> int:
        return len(self.grid_y) - 1

    @property
    def hx(self) -> float:
        return float(self.grid_x[1] - self.grid_x[0])

    @property
    def hy(self) -> float:
        return float(self.grid_y[1] - self.grid_y[0])

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (
            float(self.grid_x[0]),
            float(self.grid_x[-1]),
            float(self.grid_y[0]),
            float(self.grid_y[-1]),
        )

    def kind_counts(self) -> dict[int, int]:
        kinds, counts = np.unique(self.kinds, return_counts=True)
        return {int(k): int(c) for k, c in zip(kinds, counts)}

    def active_nodes(self) -> np.ndarray:
        """(n_active, 2) integer node indices, in DOF numbering order."""
        act = self.dof_lookup[:, :, 0] >= 0
        ii, jj = np.nonzero(act)
        order = np.argsort(self.dof_lookup[ii, jj, 0])
        return np.column_stack([ii[order], jj[order]])

    def node_coords(self, nodes: np.ndarray) -> np.ndarray:
        return np.column_stack([self.grid_x[nodes[:, 0]], self.grid_y[nodes[:, 1]]])

    def locate_cells(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cell indices containing each point; points on an interior grid
        line go to the right/upper cell, the box edges to the last cell."""
        pts = np.asarray(pts, dtype=float)
        ix = np.searchsorted(self.grid_x, pts[:, 0], side="right") - 1
        iy = np.searchsorted(self.grid_y, pts[:, 1], side="right") - 1
        ix = np.clip(ix, 0, self.nx - 1)
        iy = np.clip(iy, 0, self.ny - 1)
        return ix, iy

    def cell_dofs(self, ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
        """(n, 16) global DOF ids of the cells (ix, iy), local order
        l = 4*my + mx with mx, my in 0..3 enumerating
        (value-left, slope-left, value-right, slope-right) per direction."""
        mx = np.arange(4)
        node_off = mx // 2  # 0 0 1 1
        kind_off = mx % 2  # 0 1 0 1
        ni = ix[:, None, None] + node_off[None, None, :]
        nj = iy[:, None, None] + node_off[None, :, None]
        kk = kind_off[None, None, :] + 2 * kind_off[None, :, None]
        out = self.dof_lookup[ni, nj, kk]
        return out.reshape(len(ix), 16)


def _classify(domain: Domain, grid_x: np.ndarray, grid_y: np.ndarray) -> np.ndarray:
    nx, ny = len(grid_x) - 1, len(grid_y) - 1

    nodes = np.column_stack(
        [np.repeat(grid_x, ny + 1), np.tile(grid_y, nx + 1)]
    )
    vin = domain.contains_closed(nodes).reshape(nx + 1, ny + 1)
    vcount = (
        vin[:-1, :-1].astype(np.int8)
        + vin[1:, :-1]
        + vin[:-1, 1:]
        + vin[1:, 1:]
    )

    # 5x5 strict-containment probe at the midpoint lattice of each cell.
    r = (2 * np.arange(5) + 1) / 10.0
    px = grid_x[:-1, None] + np.diff(grid_x)[:, None] * r[None, :]  # (nx, 5)
    py = grid_y[:-1, None] + np.diff(grid_y)[:, None] * r[None, :]
    qx = np.broadcast_to(px[:, None, :, None], (nx, ny, 5, 5))
    qy = np.broadcast_to(py[None, :, None, :], (nx, ny, 5, 5))
    probe_pts = np.column_stack([qx.ravel(), qy.ravel()])
    pcount = (
        domain.contains(probe_pts).reshape(nx, ny, 25).sum(axis=2).astype(np.int32)
    )

    cut = domain.cut_cells(grid_x, grid_y)

    kinds = np.full((nx, ny), CellKind.OUTSIDE, dtype=np.int8)
    interior = (vcount == 4) & (pcount == 25) & ~cut
    kinds[interior] = CellKind.INTERIOR
    kinds[~interior & ((vcount == 2) | (vcount == 3) | (vcount == 4))] = CellKind.EDGE23
    kinds[(vcount == 1)] = CellKind.CORNER1
    kinds[(vcount == 0) & ((pcount > 0) | cut)] = CellKind.CORNER1
    return kinds


def build_mesh(
    domain: Domain,
    nx: int,
    ny: int,
    box: tuple[float, float, float, float] | None = None,
) -> BackgroundMesh:
    """Classify an nx x ny uniform division of ``box`` (default: the
    domain's bounding box) and number the active DOFs."""
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell per direction")
    if box is None:
        box = domain.bounding_box()
    a, b, c, d = map(float, box)
    grid_x = np.linspace(a, b, nx + 1)
    grid_y = np.linspace(c, d, ny + 1)

    kinds = _classify(domain, grid_x, grid_y)

    active_node = np.zeros((nx + 1, ny + 1), dtype=bool)
    act = kinds != CellKind.OUTSIDE
    for di in (0, 1):
        for dj in (0, 1):
            active_node[di : nx + di, dj : ny + dj] |= act

    dof_lookup = np.full((nx + 1, ny + 1, 4), -1, dtype=np.int32)
    ii, jj = np.nonzero(active_node)
    order = np.lexsort((jj, ii))  # lexicographic by (ix, iy)
    base = 4 * np.arange(len(ii), dtype=np.int32)
    for k in range(4):
        dof_lookup[ii[order], jj[order], k] = base + k
    n_dofs = 4 * len(ii)

    return BackgroundMesh(domain, grid_x, grid_y, kinds, dof_lookup, n_dofs)
