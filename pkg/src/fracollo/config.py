"""JSON run configuration.

A run is described by one JSON document with seven sections::

    {
      "domain":         {...},   # geometry preset
      "mesh":           {...},   # background divisions
      "collocation":    {...},   # sample densities, boundary count, scheme
      "regularization": {...},   # lambda, delta, eps, r, seed, path
      "time":           {...},   # alpha, beta, tau, horizon, corrections
      "problem":        {...},   # which benchmark problem, bc, nu
      "output":         {...}    # export directory and lattice size
    }

Every section is optional except ``problem``; unknown keys raise
``ConfigError`` so typos do not silently fall back to defaults.  The
defaults mirror the regression settings: lambda = 1e5, p = q = 10
nonuniform samples, delta = 0 on the rectangle and 0.01 with r = 1
elsewhere, tau = 2^-10, horizon t = 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .geometry import Domain
from .problems import (
    coupled_decay_problem,
    coupled_pulse_problem,
    domain_preset,
    fractional_decay_problem,
    pulse_decay_problem,
    steady_exp_problem,
)
from .solver import CoupledProblem, SolveParams, SteadyProblem, TimeProblem

__all__ = ["ConfigError", "OutputOptions", "RunConfig", "load_config", "build_run"]


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class OutputOptions:
    directory: Path = Path(".")
    export_field: bool = True
    n_lattice: int = 201


@dataclass
class RunConfig:
    """Parsed configuration bound to concrete problem objects.

    ``kind`` is one of 'steady', 'tfpde', 'coupled'.  ``sizes`` carries
    the N list for convergence studies; single solves use its first
    entry.  ``params_for(n)`` produces the per-N solver parameters.
    """

    kind: str
    problem: SteadyProblem | TimeProblem | CoupledProblem
    domain: Domain | None
    sizes: list[int]
    output: OutputOptions
    kappa_auto: bool = False
    base: dict[str, Any] = field(repr=False, default_factory=dict)

    def params_for(self, n: int) -> SolveParams:
        kw = dict(self.base)
        kw["n_x"] = n
        kw.setdefault("n_y", n)
        return SolveParams(**kw)

    @property
    def params(self) -> SolveParams:
        return self.params_for(self.sizes[0])


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return doc


def _section(doc: dict, name: str, allowed: set[str]) -> dict[str, Any]:
    sect = doc.get(name, {})
    if not isinstance(sect, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(sect) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in section {name!r}: {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}"
        )
    return sect


def _positive_int(sect: dict, key: str, default: int) -> int:
    val = sect.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool) or val <= 0:
        raise ConfigError(f"{key} must be a positive integer, got {val!r}")
    return val


_STEADY = {"steady-exp"}
_TFPDE = {"fractional-decay", "pulse-decay"}
_COUPLED = {"coupled-decay", "coupled-pulse"}


def build_run(doc: dict[str, Any]) -> RunConfig:
    """Validate a config document and construct the run objects."""
    known_sections = {
        "domain", "mesh", "collocation", "regularization",
        "time", "problem", "output",
    }
    unknown = set(doc) - known_sections
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")

    dom_s = _section(doc, "domain", {"preset", "radius", "notch"})
    mesh_s = _section(doc, "mesh", {"n_x", "n_y", "sizes"})
    col_s = _section(
        doc, "collocation",
        {"p", "q", "mode", "placement", "n_boundary", "scheme", "rho",
         "flux_points", "n_interface"},
    )
    reg_s = _section(
        doc, "regularization",
        {"lam", "delta", "eps", "r", "seed", "path"},
    )
    time_s = _section(
        doc, "time",
        {"alpha", "beta", "tau", "t_final", "n_steps", "m", "m_u", "m_f",
         "gammas", "kappa"},
    )
    prob_s = _section(doc, "problem", {"name", "bc", "nu"})
    out_s = _section(doc, "output", {"dir", "export_field", "n_lattice"})

    name = prob_s.get("name")
    if name is None:
        raise ConfigError("problem.name is required")
    if name not in _STEADY | _TFPDE | _COUPLED:
        raise ConfigError(
            f"unknown problem {name!r}; known: "
            f"{sorted(_STEADY | _TFPDE | _COUPLED)}"
        )

    preset = dom_s.get("preset", "rectangle")
    dom_kw: dict[str, Any] = {}
    if "radius" in dom_s:
        dom_kw["radius"] = float(dom_s["radius"])
    if "notch" in dom_s:
        dom_kw["lam"] = float(dom_s["notch"])
    domain: Domain | None = None
    if name not in _COUPLED:
        try:
            domain = domain_preset(preset, **dom_kw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
    elif dom_s and preset != "coupled":
        raise ConfigError(
            "coupled problems fix their own geometry; drop the domain "
            "section or set preset to 'coupled'"
        )

    # mesh: either a single n_x/n_y pair or a size list for studies
    base: dict[str, Any] = {}
    if "sizes" in mesh_s:
        if "n_x" in mesh_s or "n_y" in mesh_s:
            raise ConfigError("give either mesh.sizes or mesh.n_x/n_y, not both")
        sizes = mesh_s["sizes"]
        if (
            not isinstance(sizes, list)
            or not sizes
            or any(not isinstance(n, int) or isinstance(n, bool) or n <= 0
                   for n in sizes)
        ):
            raise ConfigError("mesh.sizes must be a nonempty list of positive ints")
        sizes = list(sizes)
    else:
        n_x = _positive_int(mesh_s, "n_x", 32)
        sizes = [n_x]
        if "n_y" in mesh_s:
            # anisotropic runs are single-size; studies scale both divisions
            base["n_y"] = _positive_int(mesh_s, "n_y", n_x)

    mode = col_s.get("mode", "nonuniform")
    if mode not in ("nonuniform", "uniform"):
        raise ConfigError("collocation.mode must be 'nonuniform' or 'uniform'")
    placement = col_s.get("placement", "midpoint")
    if placement not in ("midpoint", "node"):
        raise ConfigError("collocation.placement must be 'midpoint' or 'node'")
    scheme = col_s.get("scheme", "collocation")
    if scheme not in ("collocation", "fvm"):
        raise ConfigError("collocation.scheme must be 'collocation' or 'fvm'")
    base.update(
        p=_positive_int(col_s, "p", 10),
        q=_positive_int(col_s, "q", 10),
        mode=mode,
        placement=placement,
        fvm=(scheme == "fvm"),
        rho=float(col_s.get("rho", 1e-4)),
        n_flux=_positive_int(col_s, "flux_points", 8),
    )
    if col_s.get("n_boundary") is not None:
        base["n_b"] = _positive_int(col_s, "n_boundary", 0)
    if col_s.get("n_interface") is not None:
        base["n_c"] = _positive_int(col_s, "n_interface", 0)

    path = reg_s.get("path", "qr")
    if path not in ("qr", "kkt", "normal"):
        raise ConfigError("regularization.path must be qr, kkt or normal")
    on_rectangle = name not in _COUPLED and preset == "rectangle"
    delta = float(reg_s.get("delta", 0.0 if on_rectangle else 0.01))
    r = reg_s.get("r", 1)
    if r not in (0, 1):
        raise ConfigError("regularization.r must be 0 or 1")
    seed = reg_s.get("seed", 1)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("regularization.seed must be a nonnegative integer")
    base.update(
        lam=float(reg_s.get("lam", 1e5)),
        delta=delta,
        eps=float(reg_s.get("eps", 0.0)),
        r=r,
        seed=seed,
        path=path,
    )

    # problem construction + time discretization
    bc = prob_s.get("bc", "dirichlet")
    if bc not in ("dirichlet", "neumann"):
        raise ConfigError("problem.bc must be 'dirichlet' or 'neumann'")
    kind: str
    kappa_auto = False
    if name in _STEADY:
        if time_s:
            raise ConfigError(f"problem {name!r} is steady; drop the time section")
        kind = "steady"
        problem: Any = steady_exp_problem(
            domain, nu=float(prob_s.get("nu", 0.1)), bc=bc
        )
    else:
        if bc != "dirichlet":
            raise ConfigError("time-dependent problems are Dirichlet only")
        alpha = float(time_s.get("alpha", 0.5))
        if not 0.0 < alpha <= 1.0:
            raise ConfigError("time.alpha must lie in (0, 1]")
        tau = float(time_s.get("tau", 2.0**-10))
        if tau <= 0.0:
            raise ConfigError("time.tau must be positive")
        if "n_steps" in time_s:
            if "t_final" in time_s:
                raise ConfigError("give either time.t_final or time.n_steps")
            n_steps = _positive_int(time_s, "n_steps", 0)
        else:
            t_final = float(time_s.get("t_final", 2.0))
            if t_final <= 0.0:
                raise ConfigError("time.t_final must be positive")
            n_steps = int(round(t_final / tau))
            if not math.isclose(n_steps * tau, t_final, rel_tol=1e-9):
                raise ConfigError(
                    f"t_final = {t_final} is not a multiple of tau = {tau}"
                )
        m = time_s.get("m", 1)
        if m not in (0, 1, 2, 3):
            raise ConfigError("time.m must be 0, 1, 2 or 3")
        base.update(tau=tau, n_steps=n_steps, m=m)
        for key in ("m_u", "m_f"):
            if time_s.get(key) is not None:
                val = time_s[key]
                if val not in (0, 1, 2, 3):
                    raise ConfigError(f"time.{key} must be 0, 1, 2 or 3")
                base[key] = val
        if time_s.get("gammas") is not None:
            gam = time_s["gammas"]
            if not isinstance(gam, list) or any(
                not isinstance(g, (int, float)) or g <= 0 for g in gam
            ):
                raise ConfigError("time.gammas must be a list of positive numbers")
            base["gammas"] = [float(g) for g in gam]
        kappa = time_s.get("kappa", 0.0)
        kappa_auto = kappa == "auto"
        base["kappa"] = 0.0 if kappa_auto else float(kappa)

        if name in _COUPLED:
            kind = "coupled"
            beta = float(time_s.get("beta", alpha))
            if not 0.0 < beta <= 1.0:
                raise ConfigError("time.beta must lie in (0, 1]")
            builder = (
                coupled_decay_problem if name == "coupled-decay"
                else coupled_pulse_problem
            )
            problem = builder(alpha, beta)
        else:
            kind = "tfpde"
            if "beta" in time_s:
                raise ConfigError("time.beta applies to coupled problems only")
            builder = (
                fractional_decay_problem if name == "fractional-decay"
                else pulse_decay_problem
            )
            problem = builder(domain, alpha)

    out = OutputOptions(
        directory=Path(out_s.get("dir", ".")),
        export_field=bool(out_s.get("export_field", True)),
        n_lattice=_positive_int(out_s, "n_lattice", 201),
    )

    return RunConfig(
        kind=kind, problem=problem, domain=domain, sizes=sizes,
        output=out, kappa_auto=kappa_auto, base=base,
    )
