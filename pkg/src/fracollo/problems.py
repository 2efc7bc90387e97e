"""Benchmark domains and manufactured problems used by the demos and CLI.

The domain presets are the regression geometries: the square, the unit
disk, two smooth star-shaped regions bounded by periodic cubics through
5 and 8 control points, and a notched polygon with an adjustable notch
parameter. The problem builders pair them with manufactured data whose
exact solutions are known in closed form (exponentials for the steady
model, Mittag-Leffler decay for the time-fractional ones).
"""

from __future__ import annotations

import numpy as np

from .fractional import mittag_leffler
from .geometry import (
    AnnularDomain,
    Circle,
    Domain,
    PolylineBoundary,
    Rectangle,
    SplineBoundary,
)
from .solver import CoupledProblem, InitialData, SteadyProblem, TimeProblem

__all__ = [
    "square_domain",
    "disk_domain",
    "five_knot_domain",
    "eight_knot_domain",
    "notched_polygon_domain",
    "coupled_domains",
    "domain_preset",
    "steady_exp_problem",
    "fractional_decay_problem",
    "pulse_decay_problem",
    "coupled_decay_problem",
    "coupled_pulse_problem",
]


def square_domain() -> Rectangle:
    """The (-1, 1)^2 square; the background mesh matches it exactly."""
    return Rectangle(-1.0, 1.0, -1.0, 1.0)


def disk_domain(radius: float = 1.0) -> Circle:
    return Circle((0.0, 0.0), radius)


def five_knot_domain() -> SplineBoundary:
    """Smooth egg-shaped region through five control points."""
    knots = np.array([0.0, 0.5, 1.0, 1.5, 2.0]) * np.pi
    values = np.array(
        [
            [1.0, 0.0, -1.0, 0.0, 1.0],
            [0.9, 1.8, 0.5, -0.7, 0.9],
        ]
    )
    return SplineBoundary(knots, values)


def eight_knot_domain() -> SplineBoundary:
    """Irregular star-shaped region through eight control points."""
    knots = np.arange(8) * (2.0 * np.pi / 7.0)
    values = np.array(
        [
            [1.0, 0.5, 0.0, -0.5, -1.0, -0.4, 0.0, 1.0],
            [0.9, 1.051, 1.708, 0.791, 0.511, -0.107, 0.296, 0.9],
        ]
    )
    return SplineBoundary(knots, values)


def notched_polygon_domain(lam: float = 0.5) -> PolylineBoundary:
    """Square with a triangular notch cut into its right side.

    ``lam`` is the height of the re-entrant vertex (0, lam); raising it
    deepens the notch.
    """
    return PolylineBoundary(
        [
            (1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
            (1.0, -1.0),
            (0.5, -0.5),
            (1.0, 0.0),
            (0.0, lam),
            (1.0, 1.0),
        ]
    )


def coupled_domains() -> tuple[SplineBoundary, AnnularDomain]:
    """Inner region and the surrounding annular region of the two-field
    benchmark: the eight-knot domain inside [-1.5, 1.5] x [-1, 2]."""
    inner = eight_knot_domain()
    outer = AnnularDomain(Rectangle(-1.5, 1.5, -1.0, 2.0), inner)
    return inner, outer


_PRESETS = {
    "rectangle": square_domain,
    "disk": disk_domain,
    "spline5": five_knot_domain,
    "spline8": eight_knot_domain,
    "polygon": notched_polygon_domain,
}


def domain_preset(name: str, **kwargs) -> Domain:
    """Look up a named domain preset ('rectangle', 'disk', 'spline5',
    'spline8', 'polygon'); keyword arguments pass through to the builder."""
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown domain {name!r}; presets: {sorted(_PRESETS)}"
        ) from None
    return builder(**kwargs)


# -- steady -------------------------------------------------------------


def steady_exp_problem(
    domain: Domain, nu: float = 0.1, bc: str = "dirichlet"
) -> SteadyProblem:
    """u - nu Lap(u) = (1 - 2 nu) e^{x+y}, exact solution e^{x+y}."""

    def exact(pts):
        return np.exp(pts[:, 0] + pts[:, 1])

    def forcing(pts):
        return (1.0 - 2.0 * nu) * np.exp(pts[:, 0] + pts[:, 1])

    if bc == "neumann":

        def boundary(pts, normals):
            return (normals[:, 0] + normals[:, 1]) * np.exp(pts[:, 0] + pts[:, 1])

    else:
        boundary = exact
    return SteadyProblem(domain, nu, forcing, boundary, bc=bc, exact=exact)


# -- time-fractional single field ------------------------------------------


def _sine_initial(k: float = 1.0) -> InitialData:
    return InitialData(
        value=lambda p: np.sin(k * p[:, 0]) * np.sin(k * p[:, 1]),
        dx=lambda p: k * np.cos(k * p[:, 0]) * np.sin(k * p[:, 1]),
        dy=lambda p: k * np.sin(k * p[:, 0]) * np.cos(k * p[:, 1]),
        dxy=lambda p: k * k * np.cos(k * p[:, 0]) * np.cos(k * p[:, 1]),
    )


def fractional_decay_problem(domain: Domain, alpha: float) -> TimeProblem:
    """D^alpha u = Lap(u) + u(1 - u^2) + g with exact solution
    E_alpha(-t^alpha) sin(x) sin(y).

    The exact solution is an eigenfunction: D^alpha u = -u and
    Lap(u) = -2u, so the manufactured source reduces to g = u^3.
    """

    def exact(pts, t):
        return (
            float(mittag_leffler(alpha, -(t**alpha)))
            * np.sin(pts[:, 0])
            * np.sin(pts[:, 1])
        )

    return TimeProblem(
        domain=domain,
        alpha=alpha,
        nu=1.0,
        initial=_sine_initial(1.0),
        boundary=exact,
        source=lambda pts, t: exact(pts, t) ** 3,
        reaction=lambda u, pts, t: u * (1.0 - u * u),
        reaction_deriv=lambda u, pts, t: 1.0 - 3.0 * u * u,
        exact=exact,
    )


def pulse_decay_problem(domain: Domain, alpha: float) -> TimeProblem:
    """D^alpha u = Lap(u) + u(1 - u^2), u(0) = sin(pi x) sin(pi y),
    homogeneous Dirichlet data; no closed-form solution."""
    return TimeProblem(
        domain=domain,
        alpha=alpha,
        nu=1.0,
        initial=_sine_initial(np.pi),
        boundary=lambda pts, t: np.zeros(len(pts)),
        source=None,
        reaction=lambda u, pts, t: u * (1.0 - u * u),
        reaction_deriv=lambda u, pts, t: 1.0 - 3.0 * u * u,
    )


# -- coupled two-field system ----------------------------------------------


def coupled_decay_problem(alpha: float, beta: float) -> CoupledProblem:
    """Manufactured two-field benchmark with exact fields
    E_alpha(-t^alpha) sin(3x) sin(3y) and E_beta(-t^beta) sin(3x) sin(3y).

    With unit diffusivities Lap(u) = -18 u, so both sources are 17 times
    the respective exact field. The interface data matches exactly when
    alpha = beta; with distinct orders the fields differ on the interface
    and the problem is no longer consistent.
    """
    inner, outer = coupled_domains()

    def exact_u(pts, t):
        return (
            float(mittag_leffler(alpha, -(t**alpha)))
            * np.sin(3 * pts[:, 0])
            * np.sin(3 * pts[:, 1])
        )

    def exact_v(pts, t):
        return (
            float(mittag_leffler(beta, -(t**beta)))
            * np.sin(3 * pts[:, 0])
            * np.sin(3 * pts[:, 1])
        )

    return CoupledProblem(
        inner=inner,
        outer=outer,
        alpha=alpha,
        beta=beta,
        mu=1.0,
        nu=1.0,
        initial_u=_sine_initial(3.0),
        initial_v=_sine_initial(3.0),
        outer_boundary=exact_v,
        source_u=lambda pts, t: 17.0 * exact_u(pts, t),
        source_v=lambda pts, t: 17.0 * exact_v(pts, t),
        exact_u=exact_u,
        exact_v=exact_v,
    )


def coupled_pulse_problem(alpha: float, beta: float) -> CoupledProblem:
    """Two-field decay from sin(2 pi x) sin(2 pi y) on both sides, zero
    sources, zero outer Dirichlet data; no closed-form solution."""
    inner, outer = coupled_domains()
    return CoupledProblem(
        inner=inner,
        outer=outer,
        alpha=alpha,
        beta=beta,
        mu=1.0,
        nu=1.0,
        initial_u=_sine_initial(2.0 * np.pi),
        initial_v=_sine_initial(2.0 * np.pi),
        outer_boundary=lambda pts, t: np.zeros(len(pts)),
    )
