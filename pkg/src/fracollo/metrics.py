"""Error norms on the evaluation lattice, convergence tables, CSV export.

The error metric is a fixed-lattice discrete L2 norm over the bounding
box: 201 x 201 points, spacing (b-a)/200 by (d-c)/200, with the error
taken as zero at lattice points outside the closed domain. The lattice
never changes with the mesh, so errors from different resolutions are
directly comparable.
"""

from __future__ import annotations

import csv
import time
import traceback
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis import eval_field
from .geometry import Domain
from .meshing import BackgroundMesh

__all__ = [
    "ErrorReport",
    "ConvergenceRow",
    "evaluation_lattice",
    "l2_error",
    "convergence_study",
    "fitted_order",
    "export_field",
]


@dataclass
class ErrorReport:
    """Absolute and relative lattice L2 error of one field."""

    l2_abs: float
    l2_rel: float
    norm_exact: float
    n_lattice: int

    def __str__(self) -> str:
        return f"l2_abs={self.l2_abs:.4e} l2_rel={self.l2_rel:.4e}"


@dataclass
class ConvergenceRow:
    """One resolution of a refinement study.

    ``order`` is log2(e_prev / e) against the previous successful row;
    a failed row carries the error message and leaves the study running.
    """

    n: int
    error: float | None
    order: float | None
    seconds: float
    failure: str | None = None


def evaluation_lattice(
    box: tuple[float, float, float, float], n: int = 201
) -> tuple[np.ndarray, float, float]:
    """Row-major lattice points over the box and the spacings (hx, hy)."""
    a, b, c, d = box
    gx = a + (b - a) / (n - 1) * np.arange(n)
    gy = c + (d - c) / (n - 1) * np.arange(n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts, (b - a) / (n - 1), (d - c) / (n - 1)


def l2_error(
    mesh: BackgroundMesh,
    coeffs: np.ndarray,
    exact,
    t: float | None = None,
    domain: Domain | None = None,
    n_lattice: int = 201,
) -> ErrorReport:
    """Masked-lattice L2 error of the spline field against ``exact``.

    ``exact`` maps points (and optionally t) to values. Points outside
    the closed domain contribute zero to both the error and the norm of
    the exact solution used for the relative error.
    """
    if domain is None:
        domain = mesh.domain
    pts, hx, hy = evaluation_lattice(mesh.box, n_lattice)
    mask = domain.contains_closed(pts)
    inside = pts[mask]
    approx = eval_field(mesh, coeffs, inside)
    ue = np.asarray(exact(inside) if t is None else exact(inside, t), dtype=float)
    if ue.ndim == 0:
        ue = np.full(len(inside), float(ue))
    scale = np.sqrt(hx * hy)
    l2_abs = scale * float(np.linalg.norm(approx - ue))
    norm_exact = scale * float(np.linalg.norm(ue))
    l2_rel = l2_abs / norm_exact if norm_exact > 0 else np.inf
    return ErrorReport(l2_abs, l2_rel, norm_exact, n_lattice)


def fitted_order(ns: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(1/N)."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = np.isfinite(errors) & (errors > 0)
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two positive errors to fit an order")
    slope = np.polyfit(np.log(1.0 / ns[keep]), np.log(errors[keep]), 1)[0]
    return float(slope)


def convergence_study(
    runner: Callable[[int], float], sizes: Sequence[int]
) -> list[ConvergenceRow]:
    """Run ``runner(N)`` over the size list, collecting errors and orders.

    A row that raises is recorded with its message; the study continues,
    and the next successful row's order is taken against the last
    successful one at half rate per doubling.
    """
    rows: list[ConvergenceRow] = []
    prev: tuple[int, float] | None = None
    for n in sizes:
        t0 = time.perf_counter()
        try:
            err = float(runner(n))
        except Exception as exc:
            rows.append(
                ConvergenceRow(
                    n=n,
                    error=None,
                    order=None,
                    seconds=time.perf_counter() - t0,
                    failure=f"{type(exc).__name__}: {exc}"
                    or traceback.format_exc(limit=1),
                )
            )
            continue
        order = None
        if prev is not None and err > 0 and prev[1] > 0:
            order = float(np.log(prev[1] / err) / np.log(n / prev[0]))
        rows.append(
            ConvergenceRow(n=n, error=err, order=order, seconds=time.perf_counter() - t0)
        )
        prev = (n, err)
    return rows


def export_field(
    mesh: BackgroundMesh,
    coeffs: np.ndarray,
    path: str,
    domain: Domain | None = None,
    n_lattice: int = 201,
) -> None:
    """Write the field on the evaluation lattice as CSV.

    Columns (x, y, value, inside_flag), row-major in the lattice. The
    value column holds the spline evaluated on the full box, including
    points outside the domain (flagged 0), since the basis extends there.
    Formatting is repr-exact so identical runs produce identical bytes.
    """
    if domain is None:
        domain = mesh.domain
    pts, _, _ = evaluation_lattice(mesh.box, n_lattice)
    vals = eval_field(mesh, coeffs, pts)
    flags = domain.contains_closed(pts).astype(int)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value", "inside_flag"])
        for (x, y), v, fl in zip(pts, vals, flags):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(v)), fl])
