"""Interior and boundary collocation point generation.

Interior points come from midpoint lattices on the reference cell,
mapped affinely into each active background cell and intersected with the
domain. In the graded ("nonuniform") mode the lattice density depends on
the cell classification: fully interior cells get a fixed 5x5 lattice,
cut cells with two or three inside corners get p x q, and barely-touched
cells get 2p x 2q, which concentrates residual points in the thin slivers
near the boundary where the basis is weakly constrained. The "uniform"
mode applies p x q everywhere and exists mainly to demonstrate the
conditioning failure it causes.

Point ordering is deterministic: cells in lexicographic (ix, iy) order,
the x index varying slowest inside each cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundarySamples, Domain
from .meshing import BackgroundMesh, CellKind

__all__ = ["CollocationSet", "reference_grid", "build_collocation_set"]


def reference_grid(p: int, q: int) -> np.ndarray:
    """Midpoint lattice ((2k-1)/2p, (2l-1)/2q), k=1..p, l=1..q."""
    if p < 1 or q < 1:
        raise ValueError("lattice density must be at least 1")
    xk = (2 * np.arange(1, p + 1) - 1) / (2 * p)
    yl = (2 * np.arange(1, q + 1) - 1) / (2 * q)
    gx, gy = np.meshgrid(xk, yl, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass
class CollocationSet:
    """Interior residual points plus the boundary sample set."""

    interior: np.ndarray  # (N_in, 2)
    cells: tuple[np.ndarray, np.ndarray]  # cell index per interior point
    boundary: BoundarySamples
    p: int
    q: int
    mode: str
    per_kind: dict[int, int] = field(default_factory=dict)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary.points)


def _cell_block(
    mesh: BackgroundMesh, ii: np.ndarray, jj: np.ndarray, p: int, q: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Candidate points of one density rule on the cells (ii, jj)."""
    ref = reference_grid(p, q)
    n, k = len(ii), len(ref)
    x = mesh.grid_x[ii][:, None] + mesh.hx * ref[None, :, 0]
    y = mesh.grid_y[jj][:, None] + mesh.hy * ref[None, :, 1]
    pts = np.stack([x.ravel(), y.ravel()], axis=1)
    cell_ix = np.repeat(ii, k)
    cell_iy = np.repeat(jj, k)
    intra = np.tile(np.arange(k), n)
    return pts, cell_ix, cell_iy, intra


def build_collocation_set(
    mesh: BackgroundMesh,
    p: int = 10,
    q: int = 10,
    mode: str = "nonuniform",
    n_b: int | None = None,
    domain: Domain | None = None,
    placement: str = "midpoint",
) -> CollocationSet:
    """Assemble the interior point set and the boundary samples.

    ``n_b`` defaults to 4 max(nx, ny). The domain defaults to the one the
    mesh was built against. ``placement`` is forwarded to the domain's
    boundary sampler when it is not the default; domains without a
    placement choice only support "midpoint".
    """
    if mode not in ("nonuniform", "uniform"):
        raise ValueError(f"unknown mode {mode!r}")
    if domain is None:
        domain = mesh.domain
    if n_b is None:
        n_b = 4 * max(mesh.nx, mesh.ny)

    if mode == "uniform":
        rules = {
            CellKind.INTERIOR: (p, q),
            CellKind.EDGE23: (p, q),
            CellKind.CORNER1: (p, q),
        }
    else:
        rules = {
            CellKind.INTERIOR: (5, 5),
            CellKind.EDGE23: (p, q),
            CellKind.CORNER1: (2 * p, 2 * q),
        }

    pts_l, cix_l, ciy_l, key_l = [], [], [], []
    for kind, (pk, qk) in rules.items():
        ii, jj = np.nonzero(mesh.kinds == kind)
        if len(ii) == 0:
            continue
        pts, cix, ciy, intra = _cell_block(mesh, ii, jj, pk, qk)
        pts_l.append(pts)
        cix_l.append(cix)
        ciy_l.append(ciy)
        # composite key restores cell-major order across the kind blocks
        key_l.append((cix * (mesh.ny + 1) + ciy) * (4 * p * q + 25) + intra)
    if not pts_l:
        raise ValueError("mesh has no active cells")

    pts = np.concatenate(pts_l)
    cix = np.concatenate(cix_l)
    ciy = np.concatenate(ciy_l)
    order = np.argsort(np.concatenate(key_l), kind="stable")
    pts, cix, ciy = pts[order], cix[order], ciy[order]

    keep = domain.contains(pts)
    pts, cix, ciy = pts[keep], cix[keep], ciy[keep]
    if len(pts) == 0:
        raise ValueError("no interior collocation points: mesh/domain mismatch")

    per_kind = {
        int(kind): int(np.count_nonzero(mesh.kinds[cix, ciy] == kind))
        for kind in rules
    }
    if placement == "midpoint":
        boundary = domain.sample_boundary(n_b)
    else:
        try:
            boundary = domain.sample_boundary(n_b, placement=placement)
        except TypeError:
            raise ValueError(
                f"domain {type(domain).__name__} has no {placement!r} "
                "boundary placement"
            ) from None
    return CollocationSet(pts, (cix, ciy), boundary, p, q, mode, per_kind)
