"""Background mesh classification and Hermite bicubic evaluation."""

import numpy as np
import pytest

from fracollo.basis import basis_rows, eval_field, interpolate, shape_1d
from fracollo.geometry import Circle, Rectangle
from fracollo.meshing import CellKind, build_mesh
from fracollo.problems import five_knot_domain

from oracles import fd_dx, fd_dy, fd_laplacian

RNG = np.random.default_rng(7)


def rect_mesh(n=4, box=(-1.0, 1.0, -1.0, 1.0)):
    return build_mesh(Rectangle(*box), n, n)


def interior_points(mesh, n, margin=0.1):
    """Random points well away from cell edges, so FD stencils stay
    inside a single cell of the piecewise field."""
    ix = RNG.integers(0, mesh.nx, n)
    iy = RNG.integers(0, mesh.ny, n)
    sx = RNG.uniform(margin, 1 - margin, n)
    sy = RNG.uniform(margin, 1 - margin, n)
    return np.column_stack(
        [mesh.grid_x[ix] + sx * mesh.hx, mesh.grid_y[iy] + sy * mesh.hy]
    )


# -- 1d shape functions ------------------------------------------------------


def test_shape_kronecker_property():
    # values and slopes at the endpoints pick out exactly one DOF each
    h = 0.37
    v = shape_1d(np.array([0.0, 1.0]), h, 0)
    assert np.allclose(v[0], [1, 0, 0, 0])
    assert np.allclose(v[1], [0, 0, 1, 0])
    d = shape_1d(np.array([0.0, 1.0]), h, 1)
    assert np.allclose(d[0], [0, 1, 0, 0])
    assert np.allclose(d[1], [0, 0, 0, 1])


def test_shape_reproduces_cubics_1d():
    h = 0.6
    p = np.polynomial.Polynomial([3.0, -2.0, 1.0, -0.5])
    dp = p.deriv()
    dofs = np.array([p(0.0), dp(0.0), p(h), dp(h)])
    s = np.linspace(0, 1, 13)
    assert np.allclose(shape_1d(s, h, 0) @ dofs, p(s * h), atol=1e-13)
    assert np.allclose(shape_1d(s, h, 1) @ dofs, dp(s * h), atol=1e-12)
    assert np.allclose(shape_1d(s, h, 2) @ dofs, p.deriv(2)(s * h), atol=1e-11)


def test_shape_rejects_higher_derivatives():
    with pytest.raises(ValueError):
        shape_1d(np.array([0.5]), 1.0, 3)


# -- mesh classification -----------------------------------------------------


def test_rectangle_mesh_is_all_interior():
    mesh = rect_mesh(8)
    assert (mesh.kinds == CellKind.INTERIOR).all()
    assert mesh.n_dofs == 4 * 9 * 9
    assert mesh.hx == pytest.approx(0.25)


def test_circle_mesh_kinds_are_consistent():
    dom = Circle((0.0, 0.0), 1.0)
    mesh = build_mesh(dom, 10, 10)
    counts = mesh.kind_counts()
    assert counts.get(CellKind.INTERIOR, 0) > 0
    assert counts.get(CellKind.EDGE23, 0) > 0
    assert counts.get(CellKind.OUTSIDE, 0) > 0

    # dense probe: interior cells lie fully inside the disk, outside
    # cells miss it entirely, cut categories see both sides or graze it
    r = np.linspace(0.02, 0.98, 7)
    for i in range(mesh.nx):
        for j in range(mesh.ny):
            px = mesh.grid_x[i] + mesh.hx * r
            py = mesh.grid_y[j] + mesh.hy * r
            P = np.column_stack([np.repeat(px, 7), np.tile(py, 7)])
            frac = dom.contains(P).mean()
            kind = mesh.kinds[i, j]
            if kind == CellKind.INTERIOR:
                assert frac == 1.0
            elif kind == CellKind.OUTSIDE:
                assert frac == 0.0
            else:
                assert frac < 1.0


def test_corner_cells_on_circle():
    dom = Circle((0.0, 0.0), 0.76)
    mesh = build_mesh(dom, 4, 4, box=(-1.0, 1.0, -1.0, 1.0))
    counts = mesh.kind_counts()
    # the disk reaches a single vertex of each corner cell of this layout
    assert counts.get(CellKind.CORNER1, 0) >= 4
    assert counts.get(CellKind.EDGE23, 0) > 0


def test_active_dofs_cover_active_cells_only():
    dom = Circle((0.0, 0.0), 1.0)
    mesh = build_mesh(dom, 8, 8)
    n = 8
    active = np.zeros((n + 1, n + 1), dtype=bool)
    act = mesh.kinds != CellKind.OUTSIDE
    for di in (0, 1):
        for dj in (0, 1):
            active[di : n + di, dj : n + dj] |= act
    assert not active.all()  # this layout has inactive corner nodes
    assert ((mesh.dof_lookup[:, :, 0] >= 0) == active).all()
    # numbering is dense, 4 per node, lexicographic in (ix, iy)
    ids = np.sort(mesh.dof_lookup[mesh.dof_lookup >= 0])
    assert (ids == np.arange(mesh.n_dofs)).all()
    nodes = mesh.active_nodes()
    flat = nodes[:, 0] * (n + 1) + nodes[:, 1]
    assert (np.diff(flat) > 0).all()


def test_locate_cells_tie_breaking():
    mesh = rect_mesh(4)
    ix, iy = mesh.locate_cells(np.array([[0.0, 0.0], [1.0, 1.0], [-1.0, -1.0]]))
    # interior grid lines go right/up, box corners clamp to the last cell
    assert (ix == [2, 3, 0]).all()
    assert (iy == [2, 3, 0]).all()


def test_build_mesh_validates_divisions():
    with pytest.raises(ValueError):
        build_mesh(Rectangle(-1, 1, -1, 1), 0, 4)


# -- bicubic exactness -------------------------------------------------------


def test_tensor_cubic_reproduction():
    # interpolating any member of P3 x P3 reproduces it to rounding;
    # derivative DOFs are set analytically to keep the check at 1e-10
    mesh = rect_mesh(3, box=(0.0, 1.2, -0.3, 0.9))
    C = np.polynomial.polynomial
    cx = RNG.standard_normal((4, 4))
    dcx = C.polyder(cx, axis=0)
    dcy = C.polyder(cx, axis=1)
    coeffs = interpolate(
        mesh,
        lambda p: C.polyval2d(p[:, 0], p[:, 1], cx),
        dx=lambda p: C.polyval2d(p[:, 0], p[:, 1], dcx),
        dy=lambda p: C.polyval2d(p[:, 0], p[:, 1], dcy),
        dxy=lambda p: C.polyval2d(p[:, 0], p[:, 1], C.polyder(dcx, axis=1)),
    )
    pts = np.column_stack(
        [RNG.uniform(0.0, 1.2, 200), RNG.uniform(-0.3, 0.9, 200)]
    )

    def check(kind, want, tol):
        got = eval_field(mesh, coeffs, pts, kind)
        scale = max(np.abs(want).max(), 1.0)
        assert np.abs(got - want).max() <= tol * scale, kind

    x, y = pts[:, 0], pts[:, 1]
    check("value", C.polyval2d(x, y, cx), 1e-10)
    check("dx", C.polyval2d(x, y, dcx), 1e-9)
    check("dy", C.polyval2d(x, y, dcy), 1e-9)
    lap = C.polyval2d(x, y, C.polyder(cx, 2, axis=0)) + C.polyval2d(
        x, y, C.polyder(cx, 2, axis=1)
    )
    check("lap", lap, 1e-9)
    cross = C.polyder(C.polyder(cx, 2, axis=0), 2, axis=1)
    check("dxxyy", C.polyval2d(x, y, cross), 1e-8)


def test_c1_continuity_across_edges():
    mesh = rect_mesh(4)
    coeffs = RNG.standard_normal(mesh.n_dofs)
    # points on the vertical grid line x = grid_x[2], between nodes
    y = np.linspace(-0.9, 0.9, 17)
    pts = np.column_stack([np.full_like(y, mesh.grid_x[2]), y])
    _, iy = mesh.locate_cells(pts)
    one = np.ones(len(y), dtype=int)
    for kind in ("value", "dx", "dy"):
        a = eval_field(mesh, coeffs, pts, kind, cells=(1 * one, iy))
        b = eval_field(mesh, coeffs, pts, kind, cells=(2 * one, iy))
        scale = max(np.abs(a).max(), 1.0)
        assert np.abs(a - b).max() <= 1e-10 * scale, kind
    # and on the horizontal line y = grid_y[3]
    x = np.linspace(-0.9, 0.9, 17)
    pts = np.column_stack([x, np.full_like(x, mesh.grid_y[3])])
    ix, _ = mesh.locate_cells(pts)
    for kind in ("value", "dx", "dy"):
        a = eval_field(mesh, coeffs, pts, kind, cells=(ix, 2 * one))
        b = eval_field(mesh, coeffs, pts, kind, cells=(ix, 3 * one))
        scale = max(np.abs(a).max(), 1.0)
        assert np.abs(a - b).max() <= 1e-10 * scale, kind


def test_laplacian_rows_match_finite_differences():
    mesh = rect_mesh(5)
    coeffs = RNG.standard_normal(mesh.n_dofs)

    def f(x, y):
        return eval_field(mesh, coeffs, np.array([[x, y]]))[0]

    pts = interior_points(mesh, 20)
    got = eval_field(mesh, coeffs, pts, "lap")
    want = np.array([fd_laplacian(f, x, y, h=2e-4) for x, y in pts])
    assert np.abs(got - want).max() <= 1e-5 * np.abs(got).max()
    # lap is the sum of its pieces
    split = eval_field(mesh, coeffs, pts, "dxx") + eval_field(
        mesh, coeffs, pts, "dyy"
    )
    assert np.allclose(got, split, rtol=1e-13)


def test_gradient_rows_match_finite_differences():
    mesh = rect_mesh(5)
    coeffs = RNG.standard_normal(mesh.n_dofs)

    def f(x, y):
        return eval_field(mesh, coeffs, np.array([[x, y]]))[0]

    pts = interior_points(mesh, 12)
    for kind, oracle in (("dx", fd_dx), ("dy", fd_dy)):
        got = eval_field(mesh, coeffs, pts, kind)
        want = np.array([oracle(f, x, y, 1e-6) for x, y in pts])
        scale = max(np.abs(got).max(), 1.0)
        assert np.abs(got - want).max() <= 1e-6 * scale, kind


def test_normal_rows_combine_gradients():
    mesh = rect_mesh(4)
    coeffs = RNG.standard_normal(mesh.n_dofs)
    pts = interior_points(mesh, 9)
    th = RNG.uniform(0, 2 * np.pi, 9)
    normals = np.column_stack([np.cos(th), np.sin(th)])
    got = eval_field(mesh, coeffs, pts, "normal", normals=normals)
    want = normals[:, 0] * eval_field(mesh, coeffs, pts, "dx") + normals[
        :, 1
    ] * eval_field(mesh, coeffs, pts, "dy")
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)
    with pytest.raises(ValueError):
        eval_field(mesh, coeffs, pts, "normal")


def test_basis_rows_structure_and_agreement():
    mesh = rect_mesh(4)
    pts = np.array([[0.13, -0.41], [-0.77, 0.68]])
    rows = basis_rows(mesh, pts, "lap")
    assert rows.shape == (2, mesh.n_dofs)
    assert (np.diff(rows.indptr) == 16).all()
    coeffs = RNG.standard_normal(mesh.n_dofs)
    assert np.allclose(rows @ coeffs, eval_field(mesh, coeffs, pts, "lap"))
    with pytest.raises(ValueError):
        basis_rows(mesh, pts, "dxdy")


def test_rows_reject_points_in_inactive_cells():
    dom = Circle((0.0, 0.0), 1.0)
    mesh = build_mesh(dom, 8, 8)
    # (0.99, 0.99) falls in an entirely-outside corner cell
    with pytest.raises(ValueError):
        basis_rows(mesh, np.array([[0.99, 0.99]]))
    with pytest.raises(ValueError):
        basis_rows(mesh, np.array([[1.5, 0.0]]))


def test_interpolate_fd_fallback_close_to_analytic():
    mesh = rect_mesh(4)

    def value(p):
        return np.sin(p[:, 0]) * np.cos(p[:, 1])

    auto = interpolate(mesh, value)
    exact = interpolate(
        mesh,
        value,
        dx=lambda p: np.cos(p[:, 0]) * np.cos(p[:, 1]),
        dy=lambda p: -np.sin(p[:, 0]) * np.sin(p[:, 1]),
        dxy=lambda p: -np.cos(p[:, 0]) * np.sin(p[:, 1]),
    )
    # values are sampled identically; the numerical cross derivative is
    # the noisiest DOF, so compare the reconstructed fields instead
    assert (auto[0::4] == exact[0::4]).all()
    pts = interior_points(mesh, 50)
    diff = eval_field(mesh, auto - exact, pts)
    assert np.abs(diff).max() < 1e-6


def test_irregular_domain_interpolation_error_decays():
    # quartic interpolation error on the five-knot domain: doubling the
    # mesh should shrink the sampled max error by clearly more than 2^2
    dom = five_knot_domain()

    def value(p):
        return np.exp(p[:, 0]) * np.sin(p[:, 1])

    errs = []
    for n in (8, 16):
        mesh = build_mesh(dom, n, n)
        coeffs = interpolate(mesh, value)
        pts = mesh.node_coords(mesh.active_nodes()) + 0.37 * np.array(
            [mesh.hx, mesh.hy]
        )
        a, b, c, d = mesh.box
        ok = (pts[:, 0] < b) & (pts[:, 1] < d)
        ix, iy = mesh.locate_cells(pts)
        ok &= mesh.kinds[ix, iy] != CellKind.OUTSIDE
        got = eval_field(mesh, coeffs, pts[ok])
        errs.append(np.abs(got - value(pts[ok])).max())
    assert errs[1] < errs[0] / 6.0
