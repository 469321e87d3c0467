"""Command line interface.

Four subcommands: `sweep` maximizes the certified radius over alpha and
writes a report, `analyze` solves a single alpha, `verify` rechecks a
previously written report, and `simulate` runs trajectories.

Exit codes: 0 success, 2 bad usage or unreadable input, 3 no feasible
alpha, 4 solver breakdown, 5 failed verification.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .monomials import bundled_system, bundled_system_names, load_system, make_system
from .roa import (
    DEFAULT_ALPHA_GRID,
    RoaCertificate,
    alpha_sweep,
    default_eps,
    solve_roa,
    verify_certificate,
)
from .qc import RECIPES
from .sdp import STATUS_INFEASIBLE, STATUS_OPTIMAL
from . import sim

EXIT_INFEASIBLE = 3
EXIT_SOLVER_FAILURE = 4
EXIT_VERIFY_FAILED = 5

REPORT_FORMAT = "roaqc-report-1"


def _resolve_system(spec: str):
    looks_like_path = "/" in spec or spec.endswith(".json") or Path(spec).exists()
    try:
        if looks_like_path:
            return load_system(spec)
        return bundled_system(spec)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot load system {spec!r}: {exc}")


def _parse_alpha_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise click.UsageError(
            f"--alpha-grid expects lo:hi:count, got {text!r}"
        )
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise click.UsageError(f"--alpha-grid expects numbers, got {text!r}")
    if not (0 < lo < hi and count >= 2):
        raise click.UsageError(f"--alpha-grid needs 0 < lo < hi and count >= 2")
    return np.geomspace(lo, hi, count)


def _apply_config(ctx: click.Context, config_path) -> None:
    """File values fill in parameters the command line left at defaults."""
    if config_path is None:
        return
    try:
        data = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {config_path}: {exc}")
    if not isinstance(data, dict):
        raise click.UsageError("config file must hold a JSON object")
    params = {p.name: p for p in ctx.command.params}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in params or name == "config":
            raise click.UsageError(f"unknown config key {key!r}")
        source = ctx.get_parameter_source(name)
        if source == click.core.ParameterSource.DEFAULT:
            ctx.params[name] = params[name].type_cast_value(ctx, value)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=_json_default) + "\n")


def _write_curve_csv(path: Path, points) -> None:
    lines = ["alpha,r,status,iterations,stage"]
    for p in points:
        lines.append(f"{p.alpha!r},{p.r!r},{p.status},{p.iterations},{p.stage}")
    path.write_text("\n".join(lines) + "\n")


def _system_payload(system) -> dict:
    return {"name": system.name, "n": system.n,
            "A": system.A.tolist(), "B": system.B.tolist()}


def _certificate_payload(cert: RoaCertificate) -> dict:
    return {"P": cert.P.tolist(), "t": cert.t, "xi": cert.xi.tolist(),
            "r": cert.r, "alpha": cert.alpha, "eps": cert.eps,
            "recipe": cert.recipe}


def _verification_payload(rep) -> dict:
    return {"passed": bool(rep.passed), "cover_margin": rep.cover_margin,
            "ball_margin": rep.ball_margin, "xi_min": rep.xi_min,
            "lmi_max": rep.lmi_max, "vdot_max": rep.vdot_max,
            "samples": rep.samples}


def _write_report(out_dir: Path, system, recipe, result, points,
                  verification, seed: int, elapsed: float) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "format": REPORT_FORMAT,
        "system": _system_payload(system),
        "recipe": recipe,
        "seed": seed,
        "qc_count": result.qc_count,
        "result": {"status": result.status, "r": result.r,
                   "alpha": result.alpha},
        "certificate": (_certificate_payload(result.certificate)
                        if result.certificate is not None else None),
        "verification": verification,
    }
    if points is not None:
        report["curve"] = "curve.csv"
        _write_curve_csv(out_dir / "curve.csv", points)
    _write_json(out_dir / "report.json", report)
    _write_json(out_dir / "run_meta.json", {
        "elapsed_s": elapsed,
        "backend": sim.BACKEND,
        "versions": {"roaqc": __version__, "numpy": np.__version__},
    })
    return out_dir / "report.json"


@click.group()
@click.version_option(version=__version__, prog_name="roaqc")
def main() -> None:
    """Region of attraction estimation for quadratic systems."""


@main.command()
@click.option("--system", "system_spec", required=True,
              help="bundled system name or path to a JSON file "
                   f"(bundled: {', '.join(bundled_system_names())})")
@click.option("--recipe", default="set8", show_default=True,
              type=click.Choice(sorted(RECIPES)))
@click.option("--alpha-grid", default=None,
              help="log-spaced grid as lo:hi:count "
                   f"[default: {DEFAULT_ALPHA_GRID[0]}:{DEFAULT_ALPHA_GRID[1]}"
                   f":{DEFAULT_ALPHA_GRID[2]}]")
@click.option("--refine", default=12, show_default=True,
              help="refinement solves around the grid peak")
@click.option("--eps", default=None, type=float,
              help="decay margin [default: scaled to the dynamics]")
@click.option("--seed", default=0, show_default=True,
              help="seed for the verification sampling")
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="directory for report.json, curve.csv, run_meta.json")
@click.option("--config", default=None, type=click.Path(exists=True,
              dir_okay=False), help="JSON file with defaults for these options")
@click.pass_context
def sweep(ctx, system_spec, recipe, alpha_grid, refine, eps, seed, out, config):
    """Maximize the certified ball radius over the ellipsoid level."""
    _apply_config(ctx, config)
    p = ctx.params
    system_spec, recipe, alpha_grid = p["system_spec"], p["recipe"], p["alpha_grid"]
    refine, eps, seed, out = p["refine"], p["eps"], p["seed"], p["out"]

    system = _resolve_system(system_spec)
    alphas = _parse_alpha_grid(alpha_grid) if alpha_grid is not None else None
    t0 = time.perf_counter()
    sw = alpha_sweep(system, recipe=recipe, alphas=alphas, eps=eps,
                     refine_evals=refine)
    if sw.best is None:
        statuses = {pt.status for pt in sw.points}
        click.echo("no feasible alpha on the grid "
                   f"(statuses: {', '.join(sorted(statuses))})")
        code = (EXIT_INFEASIBLE if statuses <= {STATUS_INFEASIBLE}
                else EXIT_SOLVER_FAILURE)
        ctx.exit(code)
    rep = verify_certificate(system, sw.best.certificate, seed=seed)
    elapsed = time.perf_counter() - t0
    label = system.name or system_spec
    click.echo(f"{label} {recipe}: r = {sw.r:.6f} at alpha = {sw.alpha:.6f} "
               f"({sw.best.qc_count} constraints, "
               f"verify {'PASS' if rep.passed else 'FAIL'})")
    if out is not None:
        path = _write_report(Path(out), system, recipe, sw.best, sw.points,
                             _verification_payload(rep), seed, elapsed)
        click.echo(f"report written to {path}")
    if not rep.passed:
        ctx.exit(EXIT_VERIFY_FAILED)


@main.command()
@click.option("--system", "system_spec", required=True,
              help="bundled system name or path to a JSON file")
@click.option("--alpha", required=True, type=float,
              help="ellipsoid level to solve at")
@click.option("--recipe", default="set8", show_default=True,
              type=click.Choice(sorted(RECIPES)))
@click.option("--eps", default=None, type=float)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, type=click.Path(file_okay=False))
@click.option("--config", default=None, type=click.Path(exists=True,
              dir_okay=False))
@click.pass_context
def analyze(ctx, system_spec, alpha, recipe, eps, seed, out, config):
    """Solve the certificate problem at one fixed alpha."""
    _apply_config(ctx, config)
    p = ctx.params
    system_spec, alpha, recipe = p["system_spec"], p["alpha"], p["recipe"]
    eps, seed, out = p["eps"], p["seed"], p["out"]

    system = _resolve_system(system_spec)
    t0 = time.perf_counter()
    res = solve_roa(system, alpha, recipe=recipe, eps=eps)
    label = system.name or system_spec
    if res.status != STATUS_OPTIMAL:
        click.echo(f"{label} {recipe} at alpha={alpha:g}: {res.status}")
        ctx.exit(EXIT_INFEASIBLE if res.status == STATUS_INFEASIBLE
                 else EXIT_SOLVER_FAILURE)
    rep = verify_certificate(system, res.certificate, seed=seed)
    elapsed = time.perf_counter() - t0
    click.echo(f"{label} {recipe} at alpha={alpha:g}: r = {res.r:.6f} "
               f"({res.qc_count} constraints, "
               f"verify {'PASS' if rep.passed else 'FAIL'})")
    if out is not None:
        path = _write_report(Path(out), system, recipe, res, None,
                             _verification_payload(rep), seed, elapsed)
        click.echo(f"report written to {path}")
    if not rep.passed:
        ctx.exit(EXIT_VERIFY_FAILED)


@main.command()
@click.option("--report", "report_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="path to a report.json written by sweep or analyze")
@click.option("--samples", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def verify(ctx, report_path, samples, seed):
    """Recheck the certificate stored in a report."""
    try:
        data = json.loads(Path(report_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read report: {exc}")
    if data.get("format") != REPORT_FORMAT:
        raise click.UsageError(
            f"unrecognized report format {data.get('format')!r}"
        )
    if data.get("certificate") is None:
        raise click.UsageError("report holds no certificate")
    sysd = data["system"]
    system = make_system(np.array(sysd["A"], dtype=float),
                         np.array(sysd["B"], dtype=float),
                         name=sysd.get("name", ""))
    cd = data["certificate"]
    cert = RoaCertificate(P=np.array(cd["P"], dtype=float), t=float(cd["t"]),
                          xi=np.array(cd["xi"], dtype=float), r=float(cd["r"]),
                          alpha=float(cd["alpha"]), eps=float(cd["eps"]),
                          recipe=cd.get("recipe"))
    rep = verify_certificate(system, cert, samples=samples, seed=seed)
    click.echo(f"cover_margin = {rep.cover_margin:.3e}")
    click.echo(f"ball_margin  = {rep.ball_margin:.3e}")
    click.echo(f"xi_min       = {rep.xi_min:.3e}")
    click.echo(f"lmi_max      = {rep.lmi_max:.3e}")
    click.echo(f"vdot_max     = {rep.vdot_max:.3e}  ({rep.samples} samples)")
    click.echo(f"verification {'PASS' if rep.passed else 'FAIL'} "
               f"(r = {cert.r:.6f}, alpha = {cert.alpha:.6f})")
    if not rep.passed:
        ctx.exit(EXIT_VERIFY_FAILED)


@main.command()
@click.option("--system", "system_spec", required=True,
              help="bundled system name or path to a JSON file")
@click.option("--radius", default=None, type=float,
              help="initial condition radius for batch or portrait modes")
@click.option("--count", default=64, show_default=True,
              help="number of trajectories")
@click.option("--upper-bound", "upper_bound", is_flag=True,
              help="bisect the smallest diverging radius instead")
@click.option("--r-max", default=10.0, show_default=True,
              help="largest radius probed in upper-bound mode")
@click.option("--directions", default=256, show_default=True,
              help="sampled directions in upper-bound mode")
@click.option("--dt", default=sim.DEFAULT_DT, show_default=True)
@click.option("--t-final", default=sim.DEFAULT_T_FINAL, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="write a per-trajectory CSV here (batch mode)")
@click.option("--config", default=None, type=click.Path(exists=True,
              dir_okay=False))
@click.pass_context
def simulate(ctx, system_spec, radius, count, upper_bound, r_max, directions,
             dt, t_final, seed, out, config):
    """Integrate trajectories from sampled initial conditions."""
    _apply_config(ctx, config)
    p = ctx.params
    system_spec, radius, count = p["system_spec"], p["radius"], p["count"]
    upper_bound, r_max, directions = p["upper_bound"], p["r_max"], p["directions"]
    dt, t_final, seed, out = p["dt"], p["t_final"], p["seed"], p["out"]

    system = _resolve_system(system_spec)
    label = system.name or system_spec
    if upper_bound:
        ub = sim.roa_upper_bound(system, r_max=r_max, directions=directions,
                                 seed=seed, dt=dt, t_final=t_final)
        if not ub.found:
            click.echo(f"{label}: no divergence found below r = {r_max:g} "
                       f"({ub.n_evals} simulations)")
        else:
            click.echo(f"{label}: smallest diverging radius = {ub.r:.4f} "
                       f"({ub.n_evals} simulations)")
        return
    if radius is None:
        raise click.UsageError("--radius is required unless --upper-bound")
    U = sim.sphere_directions(system.n, count, seed=seed)
    X0 = radius * U
    batch = sim.integrate_batch(system, X0, dt=dt, t_final=t_final)
    tally = {v: batch.verdicts.count(v) for v in sorted(set(batch.verdicts))}
    summary = ", ".join(f"{k}: {v}" for k, v in tally.items())
    click.echo(f"{label} at radius {radius:g}: {summary}")
    if out is not None:
        results = [sim.SimResult(x_final=batch.X_final[i],
                                 code=int(batch.codes[i]),
                                 verdict=batch.verdicts[i],
                                 t_final=float(batch.t_exit[i]))
                   for i in range(len(X0))]
        sim.write_portrait_csv(out, X0, results)
        click.echo(f"trajectories written to {out}")


if __name__ == "__main__":
    main()
