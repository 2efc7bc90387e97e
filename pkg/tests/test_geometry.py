"""Domain geometry: containment, boundary sampling, normals, arclength."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracollo.geometry import (
    AnnularDomain,
    Circle,
    PolylineBoundary,
    Rectangle,
    SplineBoundary,
)
from fracollo.problems import (
    coupled_domains,
    eight_knot_domain,
    five_knot_domain,
    notched_polygon_domain,
)

from oracles import polygon_arclength, winding_inside


def lattice(box, n):
    a, b, c, d = box
    gx = np.linspace(a, b, n)
    gy = np.linspace(c, d, n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def dist_to_polyline(poly, pts):
    """Distance from each point to the nearest polyline segment."""
    a, b = poly[:-1], poly[1:]
    d = b - a
    lens2 = np.maximum((d * d).sum(axis=1), 1e-300)
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        t = np.clip(((p - a) * d).sum(axis=1) / lens2, 0.0, 1.0)
        proj = a + t[:, None] * d
        out[i] = np.hypot(proj[:, 0] - p[0], proj[:, 1] - p[1]).min()
    return out


# -- rectangle ---------------------------------------------------------------


def test_rectangle_validation():
    with pytest.raises(ValueError):
        Rectangle(1.0, -1.0, 0.0, 1.0)


@given(
    st.floats(-5, 5), st.floats(0.1, 5), st.floats(-5, 5), st.floats(0.1, 5),
    st.floats(-6, 6), st.floats(-6, 6),
)
@settings(max_examples=200, deadline=None)
def test_rectangle_contains_matches_inequalities(a, w, c, h, x, y):
    rect = Rectangle(a, a + w, c, c + h)
    got = rect.contains(np.array([[x, y]]))[0]
    assert got == (a < x < a + w and c < y < c + h)


def test_rectangle_boundary_samples_midpoint_layout():
    rect = Rectangle(-1.0, 1.0, -1.0, 1.0)
    bs = rect.sample_boundary(16)
    assert bs.points.shape == (16, 2)
    # equispaced in arclength, half-spacing offset, so corners never appear
    step = 8.0 / 16
    assert np.allclose(np.diff(bs.arclengths), step)
    assert np.isclose(bs.arclengths[0], step / 2)
    corners = {(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)}
    assert not (set(map(tuple, np.round(bs.points, 12))) & corners)
    # on the boundary, unit outward normals
    on_edge = (np.abs(np.abs(bs.points[:, 0]) - 1) < 1e-14) | (
        np.abs(np.abs(bs.points[:, 1]) - 1) < 1e-14
    )
    assert on_edge.all()
    assert np.allclose(np.hypot(*bs.normals.T), 1.0)
    outside = bs.points + 1e-9 * bs.normals
    inside = bs.points - 1e-9 * bs.normals
    assert not rect.contains(outside).any()
    assert rect.contains(inside).all()


def test_rectangle_boundary_samples_node_layout():
    rect = Rectangle(-1.0, 1.0, -1.0, 1.0)
    bs = rect.sample_boundary(8, placement="node")
    # anchored partition: first sample at the (a, c) corner, all four
    # corners present exactly once, each carrying its starting edge normal
    want = np.array(
        [[-1, -1], [0, -1], [1, -1], [1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0]],
        dtype=float,
    )
    assert np.allclose(bs.points, want)
    assert np.allclose(bs.arclengths, np.arange(8.0))
    norms = np.array(
        [[0, -1], [0, -1], [1, 0], [1, 0], [0, 1], [0, 1], [-1, 0], [-1, 0]],
        dtype=float,
    )
    assert np.allclose(bs.normals, norms)
    with pytest.raises(ValueError):
        rect.sample_boundary(8, placement="edges")


def test_rectangle_closed_containment_includes_edges():
    rect = Rectangle(0.0, 1.0, 0.0, 2.0)
    edge_pts = np.array([[0.0, 1.0], [1.0, 0.5], [0.5, 0.0], [0.5, 2.0]])
    assert not rect.contains(edge_pts).any()
    assert rect.contains_closed(edge_pts).all()


# -- circle ------------------------------------------------------------------


@given(
    st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 3),
    st.floats(-5, 5), st.floats(-5, 5),
)
@settings(max_examples=200, deadline=None)
def test_circle_contains_matches_radius(cx, cy, r, x, y):
    circ = Circle((cx, cy), r)
    got = circ.contains(np.array([[x, y]]))[0]
    assert got == ((x - cx) ** 2 + (y - cy) ** 2 < r * r)


def test_circle_boundary_samples():
    circ = Circle((0.5, -0.25), 0.76)
    bs = circ.sample_boundary(12)
    radii = np.hypot(bs.points[:, 0] - 0.5, bs.points[:, 1] + 0.25)
    assert np.allclose(radii, 0.76)
    # first sample sits at angle zero; spacing is uniform in angle
    assert np.allclose(bs.points[0], [0.5 + 0.76, -0.25])
    ang = np.arctan2(bs.points[:, 1] + 0.25, bs.points[:, 0] - 0.5)
    dd = np.diff(np.unwrap(ang))
    assert np.allclose(dd, 2 * np.pi / 12)
    assert np.allclose(bs.normals, (bs.points - [0.5, -0.25]) / 0.76)
    assert np.allclose(bs.arclengths, 0.76 * 2 * np.pi * np.arange(12) / 12)


def test_circle_polyline_chord_tolerance():
    circ = Circle((0.0, 0.0), 1.0)
    (poly,) = circ.boundary_polylines()
    radii = np.hypot(poly[:, 0], poly[:, 1])
    assert np.allclose(radii, 1.0, atol=1e-12)
    # midpoint sag of each chord stays below the advertised tolerance
    mid = 0.5 * (poly[:-1] + poly[1:])
    sag = 1.0 - np.hypot(mid[:, 0], mid[:, 1])
    assert sag.max() <= 1e-10 * circ.diameter * 1.01


# -- spline-bounded domains --------------------------------------------------


@pytest.mark.parametrize("factory", [five_knot_domain, eight_knot_domain])
def test_spline_inside_matches_winding_oracle(factory):
    dom = factory()
    pts = lattice(dom.bounding_box(), 41)
    got = dom.contains(pts)
    want = winding_inside(dom.boundary_polylines()[0], pts)
    assert (got == want).mean() >= 0.9999


def test_spline_samples_on_curve_equispaced():
    dom = five_knot_domain()
    bs = dom.sample_boundary(40)
    # equal arclength spacing, first sample at the parameter origin
    assert np.isclose(bs.arclengths[0], 0.0)
    steps = np.diff(bs.arclengths)
    assert np.allclose(steps, dom.perimeter / 40, rtol=1e-6)
    assert np.allclose(bs.points[0], dom.point(dom.knots[0])[0], atol=1e-8)
    # samples sit on the cached polyline up to chord tolerance
    (poly,) = dom.boundary_polylines()
    assert dist_to_polyline(poly, bs.points[::5]).max() < 1e-8 * dom.diameter
    # normals are unit and outward
    assert np.allclose(np.hypot(*bs.normals.T), 1.0)
    eps = 1e-6 * dom.diameter
    assert not dom.contains(bs.points + eps * bs.normals).any()
    assert dom.contains(bs.points - eps * bs.normals).all()


def test_spline_perimeter_against_polygon_oracle():
    dom = eight_knot_domain()
    t0, t1 = dom.knots[0], dom.knots[-1]

    def curve(t):
        return dom.point(t0 + (t1 - t0) * np.asarray(t))

    assert np.isclose(dom.perimeter, polygon_arclength(curve), rtol=1e-8)


def test_spline_requires_closed_input():
    with pytest.raises(ValueError):
        SplineBoundary([0.0, 1.0, 2.0], [[0.0, 1.0, 0.5], [0.0, 0.0, 1.0]])


# -- polyline domain ---------------------------------------------------------


def test_polygon_inside_matches_winding_oracle():
    dom = notched_polygon_domain(0.5)
    pts = lattice(dom.bounding_box(), 41)
    # keep query points off the edges where both tests are ambiguous
    keep = dist_to_polyline(dom.vertices, pts) > 1e-9
    got = dom.contains(pts[keep])
    want = winding_inside(dom.vertices, pts[keep])
    assert (got == want).mean() >= 0.9999


def test_polygon_notch_point_classification():
    shallow = notched_polygon_domain(0.5)
    deep = notched_polygon_domain(0.75)
    probe = np.array([[0.9, 0.2]])  # inside the notch wedge
    assert not shallow.contains(probe)[0]
    assert not deep.contains(probe)[0]
    assert shallow.contains(np.array([[-0.5, 0.0]])).all()


def test_polygon_samples_avoid_vertices():
    dom = notched_polygon_domain(0.5)
    bs = dom.sample_boundary(24)
    verts = dom.boundary_polylines()[0]
    for v in verts:
        d = np.hypot(bs.points[:, 0] - v[0], bs.points[:, 1] - v[1])
        assert d.min() > 1e-8
    eps = 1e-7 * dom.diameter
    assert not dom.contains(bs.points + eps * bs.normals).any()
    assert dom.contains(bs.points - eps * bs.normals).all()


# -- annular region ----------------------------------------------------------


def test_annular_containment_and_boundary():
    inner, outer = coupled_domains()
    assert isinstance(outer, AnnularDomain)
    pts = lattice(outer.bounding_box(), 31)
    got = outer.contains(pts)
    want = outer.outer.contains(pts) & ~inner.contains_closed(pts)
    assert (got == want).all()
    # the outer boundary is the rectangle, sampled off the corners
    bs = outer.sample_boundary(20)
    a, b, c, d = outer.outer.bounding_box()
    on_edge = (
        np.isclose(bs.points[:, 0], a) | np.isclose(bs.points[:, 0], b)
        | np.isclose(bs.points[:, 1], c) | np.isclose(bs.points[:, 1], d)
    )
    assert on_edge.all()


def test_cut_cells_marks_only_crossed_cells():
    circ = Circle((0.0, 0.0), 1.0)
    grid = np.linspace(-1.25, 1.25, 11)
    cut = circ.cut_cells(grid, grid)
    # centre cell is strictly inside, corner cells strictly outside
    assert not cut[5, 5]
    assert not cut[0, 0]
    assert cut.any()
    # every cut cell straddles the unit circle: its corners disagree
    for i in range(10):
        for j in range(10):
            corners = np.array(
                [
                    [grid[i], grid[j]],
                    [grid[i + 1], grid[j]],
                    [grid[i], grid[j + 1]],
                    [grid[i + 1], grid[j + 1]],
                ]
            )
            r = np.hypot(corners[:, 0], corners[:, 1])
            if cut[i, j]:
                assert r.min() < 1.0 < r.max()
