"""Command line entry point.

Five subcommands, each taking one JSON config file::

    fracollo solve-model   config.json   steady solve
    fracollo solve-tfpde   config.json   time-fractional trajectory
    fracollo solve-coupled config.json   two-field interface problem
    fracollo convergence   config.json   N sweep with observed orders
    fracollo diagnose-svd  config.json   extremal singular values of the stack

Common flags: --out DIR overrides output.dir, --seed overrides
regularization.seed, --path overrides the factorization path.  Exit
codes: 0 success, 1 config error, 2 numerical failure.

FRACOLLO_THREADS caps the BLAS worker count; it must be read before
numpy loads, so this module sets the standard thread env vars on import
when it is the process entry point.
"""

from __future__ import annotations

import os
import sys


def _cap_threads() -> None:
    cap = os.environ.get("FRACOLLO_THREADS")
    if not cap:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, cap)


_cap_threads()  # before the numpy import below

import argparse
import json
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, build_run, load_config
from .lsq import smallest_singular_values
from .metrics import convergence_study, export_field, l2_error
from .solver import (
    estimate_kappa,
    solve_coupled,
    solve_model,
    solve_tfpde,
    steady_blocks,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracollo",
        description="Regularized least-squares collocation runner",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve-model", "steady reaction-diffusion solve"),
        ("solve-tfpde", "time-fractional trajectory"),
        ("solve-coupled", "two-field coupled trajectory"),
        ("convergence", "mesh refinement study"),
        ("diagnose-svd", "singular values of the stacked matrix"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="perturbation seed override")
        p.add_argument(
            "--path", choices=("qr", "kkt", "normal"),
            help="factorization path override",
        )
    return ap


def _configure(args: argparse.Namespace) -> RunConfig:
    doc = load_config(args.config)
    if args.seed is not None:
        doc.setdefault("regularization", {})["seed"] = args.seed
    if args.path is not None:
        doc.setdefault("regularization", {})["path"] = args.path
    if args.out is not None:
        doc.setdefault("output", {})["dir"] = args.out
    rc = build_run(doc)
    if rc.kappa_auto:
        coarse = rc.params_for(max(4, rc.sizes[0] // 4))
        rc.base["kappa"] = estimate_kappa(rc.problem, coarse)
    return rc


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _report_errors(rc: RunConfig, mesh, coeffs, *, t=None, domain=None):
    exact = getattr(rc.problem, "exact", None)
    if exact is None:
        return None
    fn = exact if t is None else (lambda p: exact(p, t))
    rep = l2_error(mesh, coeffs, fn, domain=domain, n_lattice=rc.output.n_lattice)
    return {
        "l2_abs": rep.l2_abs,
        "l2_rel": rep.l2_rel,
        "norm_exact": rep.norm_exact,
    }


def _cmd_solve_model(rc: RunConfig) -> dict:
    if rc.kind != "steady":
        raise ConfigError("solve-model needs a steady problem")
    t0 = time.perf_counter()
    res = solve_model(rc.problem, rc.params)
    payload = {
        "command": "solve-model",
        "n": rc.sizes[0],
        "seconds": time.perf_counter() - t0,
        "residual_boundary": res.solution.residual_boundary,
        "errors": _report_errors(rc, res.mesh, res.solution.c,
                                 domain=rc.problem.domain),
    }
    if rc.output.export_field:
        out = rc.output.directory / "field.csv"
        export_field(res.mesh, res.solution.c, out,
                     domain=rc.problem.domain, n_lattice=rc.output.n_lattice)
        payload["field_csv"] = str(out)
    return payload


def _cmd_solve_tfpde(rc: RunConfig) -> dict:
    if rc.kind != "tfpde":
        raise ConfigError("solve-tfpde needs a time-fractional problem")
    t0 = time.perf_counter()
    res = solve_tfpde(rc.problem, rc.params)
    t_end = float(res.times[-1])
    payload = {
        "command": "solve-tfpde",
        "n": rc.sizes[0],
        "t_final": t_end,
        "steps": len(res.times) - 1,
        "seconds": time.perf_counter() - t0,
        "startup_iterations": res.startup_iterations,
        "residual_boundary": float(np.max(np.abs(res.residual_boundary))),
        "errors": _report_errors(rc, res.mesh, res.coeffs[-1], t=t_end,
                                 domain=rc.problem.domain),
    }
    if rc.output.export_field:
        out = rc.output.directory / "field.csv"
        export_field(res.mesh, res.coeffs[-1], out,
                     domain=rc.problem.domain, n_lattice=rc.output.n_lattice)
        payload["field_csv"] = str(out)
    return payload


def _cmd_solve_coupled(rc: RunConfig) -> dict:
    if rc.kind != "coupled":
        raise ConfigError("solve-coupled needs a coupled problem")
    t0 = time.perf_counter()
    res = solve_coupled(rc.problem, rc.params)
    t_end = float(res.times[-1])
    M_u = res.mesh_u.n_dofs
    errs = {}
    for tag, mesh, coeffs, exact, dom in (
        ("u", res.mesh_u, res.coeffs_u[-1], rc.problem.exact_u,
         rc.problem.inner),
        ("v", res.mesh_v, res.coeffs_v[-1], rc.problem.exact_v,
         rc.problem.outer),
    ):
        if exact is not None:
            rep = l2_error(mesh, coeffs, lambda p: exact(p, t_end),
                           domain=dom, n_lattice=rc.output.n_lattice)
            errs[tag] = {"l2_abs": rep.l2_abs, "l2_rel": rep.l2_rel}
    payload = {
        "command": "solve-coupled",
        "n": rc.sizes[0],
        "t_final": t_end,
        "steps": len(res.times) - 1,
        "seconds": time.perf_counter() - t0,
        "startup_iterations": res.startup_iterations,
        "residual_boundary": float(np.max(np.abs(res.residual_boundary))),
        "errors": errs or None,
        "n_dofs": [M_u, res.mesh_v.n_dofs],
    }
    if rc.output.export_field:
        for tag, mesh, coeffs, dom in (
            ("u", res.mesh_u, res.coeffs_u[-1], rc.problem.inner),
            ("v", res.mesh_v, res.coeffs_v[-1], rc.problem.outer),
        ):
            out = rc.output.directory / f"field_{tag}.csv"
            export_field(mesh, coeffs, out, domain=dom,
                         n_lattice=rc.output.n_lattice)
            payload[f"field_csv_{tag}"] = str(out)
    return payload


def _cmd_convergence(rc: RunConfig) -> dict:
    if rc.kind == "coupled":
        raise ConfigError("convergence studies cover single-field problems")
    exact = getattr(rc.problem, "exact", None)
    if exact is None:
        raise ConfigError("convergence study needs a problem with an exact solution")

    if rc.kind == "steady":
        def runner(n: int) -> float:
            res = solve_model(rc.problem, rc.params_for(n))
            rep = l2_error(res.mesh, res.solution.c, exact,
                           domain=rc.problem.domain,
                           n_lattice=rc.output.n_lattice)
            return rep.l2_abs
    else:
        def runner(n: int) -> float:
            res = solve_tfpde(rc.problem, rc.params_for(n))
            t_end = float(res.times[-1])
            rep = l2_error(res.mesh, res.coeffs[-1],
                           lambda p: exact(p, t_end),
                           domain=rc.problem.domain,
                           n_lattice=rc.output.n_lattice)
            return rep.l2_abs

    rows = convergence_study(runner, rc.sizes)
    table = [
        {"n": r.n, "error": r.error, "order": r.order,
         "seconds": r.seconds, "failure": r.failure}
        for r in rows
    ]
    return {"command": "convergence", "rows": table}


def _cmd_diagnose_svd(rc: RunConfig) -> dict:
    if rc.kind != "steady":
        raise ConfigError("diagnose-svd inspects the steady stacked matrix")
    params = rc.params
    _, _, blocks = steady_blocks(rc.problem, params)
    small, sigma_max = smallest_singular_values(blocks, k=8)
    sigma_min = float(small[0])
    return {
        "command": "diagnose-svd",
        "n": rc.sizes[0],
        "mode": params.mode,
        "delta": params.delta,
        "sigma_max": sigma_max,
        "sigma_min": sigma_min,
        "smallest": [float(s) for s in small],
        "condition": sigma_max / sigma_min if sigma_min > 0 else float("inf"),
    }


_COMMANDS = {
    "solve-model": _cmd_solve_model,
    "solve-tfpde": _cmd_solve_tfpde,
    "solve-coupled": _cmd_solve_coupled,
    "convergence": _cmd_convergence,
    "diagnose-svd": _cmd_diagnose_svd,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        rc = _configure(args)
        payload = _COMMANDS[args.command](rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # parameter validation inside the solver layers
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        # solver layers raise RuntimeError on singular or non-finite solves
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    _write_json(rc.output.directory / "report.json", payload)
    if payload.get("errors"):
        print(json.dumps(payload["errors"]))
    if "rows" in payload:
        for row in payload["rows"]:
            order = "" if row["order"] is None else f"{row['order']:.4f}"
            err = ("failed: " + row["failure"] if row["failure"]
                   else f"{row['error']:.4e}")
            print(f"N={row['n']:4d}  {err}  {order}")
    print(f"report: {rc.output.directory / 'report.json'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
