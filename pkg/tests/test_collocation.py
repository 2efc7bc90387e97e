"""Interior lattice and boundary sample generation."""

import numpy as np
import pytest

from fracollo.collocation import build_collocation_set, reference_grid
from fracollo.geometry import Circle, Rectangle
from fracollo.meshing import CellKind, build_mesh


def test_reference_grid_is_midpoint_lattice():
    assert np.array_equal(reference_grid(1, 1), [[0.5, 0.5]])
    g = reference_grid(2, 2)
    # x index varies slowest
    assert np.allclose(
        g, [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]]
    )
    g = reference_grid(5, 3)
    assert g.shape == (15, 2)
    assert np.allclose(np.unique(g[:, 0]), (2 * np.arange(1, 6) - 1) / 10)
    assert np.allclose(np.unique(g[:, 1]), (2 * np.arange(1, 4) - 1) / 6)
    with pytest.raises(ValueError):
        reference_grid(0, 3)


def test_rectangle_gets_five_by_five_everywhere():
    mesh = build_mesh(Rectangle(-1, 1, -1, 1), 6, 6)
    cs = build_collocation_set(mesh, p=9, q=9)
    # graded mode puts the fixed coarse lattice on fully interior cells
    assert cs.n_interior == 25 * 36
    assert cs.per_kind[CellKind.INTERIOR] == 25 * 36
    assert cs.per_kind[CellKind.EDGE23] == 0
    assert cs.per_kind[CellKind.CORNER1] == 0
    assert cs.n_boundary == 4 * 6
    assert mesh.domain.contains(cs.interior).all()


def test_explicit_boundary_count_and_mode_validation():
    mesh = build_mesh(Rectangle(-1, 1, -1, 1), 4, 4)
    cs = build_collocation_set(mesh, n_b=37)
    assert cs.n_boundary == 37
    with pytest.raises(ValueError):
        build_collocation_set(mesh, mode="adaptive")


def test_boundary_placement_forwarding():
    rect = Rectangle(-1, 1, -1, 1)
    mesh = build_mesh(rect, 4, 4)
    cs = build_collocation_set(mesh, n_b=8, placement="node")
    assert np.allclose(cs.boundary.points, rect.sample_boundary(8, "node").points)
    # circles have a single canonical sampling, so only midpoint works there
    cmesh = build_mesh(Circle((0, 0), 1.0), 4, 4)
    with pytest.raises(ValueError, match="placement"):
        build_collocation_set(cmesh, n_b=8, placement="node")


def test_graded_densities_on_circle():
    dom = Circle((0.0, 0.0), 1.0)
    mesh = build_mesh(dom, 8, 8)
    p = q = 4
    cs = build_collocation_set(mesh, p=p, q=q)
    assert dom.contains(cs.interior).all()

    cix, ciy = cs.cells
    kinds = mesh.kinds[cix, ciy]
    # interior cells keep their whole 5x5 block
    n_int_cells = mesh.kind_counts()[CellKind.INTERIOR]
    assert np.count_nonzero(kinds == CellKind.INTERIOR) == 25 * n_int_cells
    # cut cells lose the outside part of their lattice
    for kind, cap in ((CellKind.EDGE23, p * q), (CellKind.CORNER1, 4 * p * q)):
        per_cell = np.bincount(
            (cix * (mesh.ny + 1) + ciy)[kinds == kind]
        )
        per_cell = per_cell[per_cell > 0]
        assert per_cell.max() <= cap
        assert per_cell.min() >= 1
    # and the recorded tallies match
    for kind, count in cs.per_kind.items():
        assert count == np.count_nonzero(kinds == kind)
    # every point sits in the cell it is attributed to
    lx, ly = mesh.locate_cells(cs.interior)
    assert (lx == cix).all() and (ly == ciy).all()


def test_uniform_mode_applies_one_rule():
    dom = Circle((0.0, 0.0), 1.0)
    mesh = build_mesh(dom, 8, 8)
    cs = build_collocation_set(mesh, p=5, q=5, mode="uniform")
    cix, ciy = cs.cells
    per_cell = np.bincount(cix * (mesh.ny + 1) + ciy)
    assert per_cell.max() == 25
    n_int = mesh.kind_counts()[CellKind.INTERIOR]
    kinds = mesh.kinds[cix, ciy]
    assert np.count_nonzero(kinds == CellKind.INTERIOR) == 25 * n_int


def test_point_order_is_cell_major_and_deterministic():
    dom = Circle((0.0, 0.0), 1.0)
    mesh = build_mesh(dom, 6, 6)
    cs = build_collocation_set(mesh, p=3, q=4)
    cix, ciy = cs.cells
    flat = cix * (mesh.ny + 1) + ciy
    assert (np.diff(flat) >= 0).all()
    again = build_collocation_set(mesh, p=3, q=4)
    assert np.array_equal(cs.interior, again.interior)
    assert np.array_equal(cs.boundary.points, again.boundary.points)


def test_boundary_samples_come_from_domain():
    dom = Circle((0.5, -0.25), 0.76)
    mesh = build_mesh(dom, 4, 4, box=(-1.0, 1.0, -1.0, 1.0))
    cs = build_collocation_set(mesh, n_b=16)
    rad = np.hypot(
        cs.boundary.points[:, 0] - 0.5, cs.boundary.points[:, 1] + 0.25
    )
    assert np.allclose(rad, 0.76, atol=1e-12)
