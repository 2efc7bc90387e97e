"""Row blocks: collocation, control volumes, boundary and interface rows."""

import numpy as np
import pytest

from fracollo.assembly import (
    LsBlocks,
    assemble_collocation,
    assemble_dirichlet,
    assemble_fvm,
    assemble_interface,
    assemble_neumann,
    default_flux_penalty,
)
from fracollo.basis import eval_field
from fracollo.geometry import BoundarySamples, Rectangle
from fracollo.meshing import build_mesh

RNG = np.random.default_rng(11)


def rect_mesh(n=4, box=(-1.0, 1.0, -1.0, 1.0)):
    return build_mesh(Rectangle(*box), n, n)


def cell_centers(mesh):
    cx = 0.5 * (mesh.grid_x[:-1] + mesh.grid_x[1:])
    cy = 0.5 * (mesh.grid_y[:-1] + mesh.grid_y[1:])
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def test_collocation_rows_evaluate_value_and_laplacian():
    mesh = rect_mesh(4)
    pts = np.array([[0.31, -0.62], [-0.11, 0.47], [0.83, 0.09]])
    A, S = assemble_collocation(mesh, pts)
    c = RNG.standard_normal(mesh.n_dofs)
    assert np.allclose(A @ c, eval_field(mesh, c, pts))
    assert np.allclose(S @ c, eval_field(mesh, c, pts, "lap"))


def test_dirichlet_rows_are_value_rows():
    mesh = rect_mesh(4)
    samples = mesh.domain.sample_boundary(20)
    A_b = assemble_dirichlet(mesh, samples)
    c = RNG.standard_normal(mesh.n_dofs)
    assert np.allclose(A_b @ c, eval_field(mesh, c, samples.points))


def test_neumann_rows_combine_pde_and_flux():
    mesh = rect_mesh(4)
    samples = mesh.domain.sample_boundary(16)
    nu, pen = 0.7, 12.5
    R = assemble_neumann(mesh, samples, nu, pen)
    c = RNG.standard_normal(mesh.n_dofs)
    want = (
        eval_field(mesh, c, samples.points)
        - nu * eval_field(mesh, c, samples.points, "lap")
        - pen
        * eval_field(mesh, c, samples.points, "normal", normals=samples.normals)
    )
    assert np.allclose(R @ c, want)


def test_default_flux_penalty_scales_with_resolution():
    assert default_flux_penalty(rect_mesh(8)) == pytest.approx(4 * 2 * 8)
    mesh = build_mesh(Rectangle(0, 1, 0, 3), 4, 6)
    assert default_flux_penalty(mesh) == pytest.approx(4 * max(4.0, 18.0))


def test_fvm_average_rows_are_value_plus_laplacian_correction():
    mesh = rect_mesh(4)
    pts = cell_centers(mesh)
    rho = 0.01
    A_t, S_t, n_fb = assemble_fvm(mesh, pts, rho)
    assert n_fb == 0
    A, S = assemble_collocation(mesh, pts)
    diff = (A_t - (A + rho * rho / 8.0 * S)).toarray()
    assert np.abs(diff).max() < 1e-14


def test_fvm_flux_rule_is_exact_inside_a_cell():
    # the integrand along a control circle inside one cell is a low-order
    # trigonometric polynomial, so 8 and 64 flux points give the same sum
    mesh = rect_mesh(4)
    pts = cell_centers(mesh)
    c = RNG.standard_normal(mesh.n_dofs)
    _, S8, _ = assemble_fvm(mesh, pts, rho=0.01, n_flux=8)
    _, S64, _ = assemble_fvm(mesh, pts, rho=0.01, n_flux=64)
    a, b = S8 @ c, S64 @ c
    assert np.abs(a - b).max() <= 1e-9 * np.abs(a).max()


def test_fvm_flux_approaches_laplacian_rows():
    mesh = rect_mesh(4)
    pts = cell_centers(mesh)
    c = RNG.standard_normal(mesh.n_dofs)
    lap = eval_field(mesh, c, pts, "lap")
    errs = []
    for rho in (4e-2, 4e-3):
        _, S_t, _ = assemble_fvm(mesh, pts, rho)
        errs.append(np.abs(S_t @ c - lap).max())
    assert errs[0] < 1e-2 * np.abs(lap).max()
    # quadratic in rho: two decades for one decade of radius
    assert errs[1] < 3e-2 * errs[0]


def test_fvm_fallback_rows_revert_to_collocation():
    mesh = rect_mesh(4)
    pts = np.array([[0.9, 0.0], [0.0, 0.0], [-0.85, 0.91]])
    A_t, S_t, n_fb = assemble_fvm(mesh, pts, rho=0.2)
    assert n_fb == 2
    A, S = assemble_collocation(mesh, pts)
    # clipped circles keep the plain pointwise rows
    for i in (0, 2):
        assert np.abs((S_t[i] - S[i]).toarray()).max() == 0.0
        assert np.abs((A_t[i] - A[i]).toarray()).max() == 0.0
    # the interior one is a genuine flux row
    assert np.abs((S_t[1] - S[1]).toarray()).max() > 0.0


def test_fvm_validation():
    mesh = rect_mesh(4)
    pts = np.array([[0.0, 0.0]])
    with pytest.raises(ValueError):
        assemble_fvm(mesh, pts, rho=0.0)
    with pytest.raises(ValueError):
        assemble_fvm(mesh, pts, rho=0.1, n_flux=4)


def test_interface_rows_tie_two_fields():
    mesh_u = rect_mesh(4)
    mesh_v = build_mesh(Rectangle(-1.5, 1.5, -1.0, 2.0), 5, 5)
    th = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    samples = BoundarySamples(
        points=0.5 * np.column_stack([np.cos(th), np.sin(th)]),
        normals=np.column_stack([np.cos(th), np.sin(th)]),
        arclengths=0.5 * th,
    )
    cont, flux = assemble_interface(mesh_u, mesh_v, samples)
    cu = RNG.standard_normal(mesh_u.n_dofs)
    cv = RNG.standard_normal(mesh_v.n_dofs)
    z = np.concatenate([cu, cv])
    want = eval_field(mesh_u, cu, samples.points) - eval_field(
        mesh_v, cv, samples.points
    )
    assert np.allclose(cont @ z, want)
    want = eval_field(
        mesh_u, cu, samples.points, "normal", normals=samples.normals
    ) - eval_field(mesh_v, cv, samples.points, "normal", normals=samples.normals)
    assert np.allclose(flux @ z, want)


def test_blocks_validation_and_interior_op():
    mesh = rect_mesh(2)
    pts = np.array([[0.1, 0.1]])
    A, S = assemble_collocation(mesh, pts)
    samples = mesh.domain.sample_boundary(8)
    A_b = assemble_dirichlet(mesh, samples)
    mk = lambda **kw: LsBlocks(
        A_in=A,
        S_in=S,
        A_b=A_b,
        f_in=np.zeros(1),
        u_b=np.zeros(8),
        nu=kw.get("nu", 1.0),
        lam=kw.get("lam", 1e4),
        delta=kw.get("delta", 0.0),
        d_star=np.zeros(mesh.n_dofs),
    )
    blocks = mk()
    assert blocks.n_dofs == mesh.n_dofs
    c = RNG.standard_normal(mesh.n_dofs)
    assert np.allclose(blocks.interior_op() @ c, A @ c - S @ c)
    assert np.allclose(mk(nu=0.0).interior_op() @ c, A @ c)
    with pytest.raises(ValueError):
        mk(lam=0.0)
    with pytest.raises(ValueError):
        mk(delta=-1.0)
