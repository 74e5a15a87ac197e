"""Command-line interface.

Commands: ``analyze``, ``monomial``, ``flow``, ``reduce``, ``exponent``.
Exit codes: 0 when the analysis completed (whatever the verdict), 2 for input
errors, 3 for numerical failures.  Errors are printed as a JSON object.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, load_config, to_dict
from .errors import InputError, InsufficientDecay, LojaError, NotCritical, NumericalFailure
from .flow import (FlowTrajectory, attracting_start, check_bound, exponent_from_flow, fit_decay,
                   integrate, limit_value, orbit_constant)
from .lojasiewicz import estimate_sampling, monomial_exponent, quadratic_constant, verify_inequality
from .morse_bott import VerdictKind, classify, kernel_split
from .parse import PolySyntaxError, parse_poly
from .poly import Poly
from .report import dumps, envelope, error_object
from .splitting import SplitChart

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


# -- argument helpers ------------------------------------------------------

def _read_poly_text(arg: str) -> str:
    if arg.startswith("@"):
        try:
            return Path(arg[1:]).read_text().strip()
        except OSError as exc:
            raise InputError(f"cannot read polynomial file {arg[1:]}: {exc}") from exc
    return arg


def _parse_point(text: str | None) -> np.ndarray | None:
    if text is None:
        return None
    try:
        return np.array([float(s) for s in text.split(",")], dtype=float)
    except ValueError as exc:
        raise InputError(f"--at expects comma-separated numbers, got {text!r}") from exc


def _load(args, cfg: Config) -> tuple[Poly, np.ndarray]:
    if args.poly is None:
        raise InputError("--poly is required")
    text = _read_poly_text(args.poly)
    at = _parse_point(args.at)
    dim = args.dim
    if at is not None:
        dim = max(dim or 0, at.size)
    f = parse_poly(text, dim, prune=cfg.poly.prune)
    if at is None:
        at = np.zeros(f.dim)
    if at.size != f.dim:
        raise InputError(f"--at has {at.size} coordinates, polynomial has dim {f.dim}")
    return f, at


def _input_echo(f: Poly, at: np.ndarray) -> dict:
    return {"poly": f.to_text(), "dim": f.dim, "at": at.tolist()}


def _section(fn):
    """Run ``fn``; numerical failures become an error entry instead of aborting."""
    try:
        return fn()
    except NumericalFailure as exc:
        return error_object(exc)


# -- flow pipeline ---------------------------------------------------------

def _trajectory_summary(traj: FlowTrajectory) -> dict:
    return {"start": traj.states[0].tolist(), "n_steps": len(traj),
            "terminated_by": traj.terminated_by, "t_final": float(traj.times[-1]),
            "final_state": traj.final_state.tolist(), "f_final": float(traj.f_values[-1]),
            "gradnorm_final": float(traj.grad_norms[-1])}


def _flow_pipeline(f: Poly, start: np.ndarray, cfg: Config,
                   f_inf: float | None = None) -> tuple[FlowTrajectory, dict]:
    """Integrate, fit the decay of ``f - f_inf`` and check the rate envelope.

    ``f_inf`` defaults to the extrapolated limit when the flow reached the
    gradient floor, else to zero.
    """
    traj = integrate(f, start, cfg.flow.t_end, cfg.flow.integrator)
    out = {"trajectory": _trajectory_summary(traj)}
    if f_inf is None:
        f_inf = limit_value(traj) if traj.terminated_by == "gradient_floor" else 0.0
    try:
        fit = fit_decay(traj, f_inf=f_inf)
    except InsufficientDecay as exc:
        out.update(decay_fit=error_object(exc), exponent=None,
                   bound_check={"skipped": "no decay regime identified"})
        return traj, out
    est = exponent_from_flow(fit, cfg.sampling.theta_max)
    out["decay_fit"] = fit.to_dict()
    out["exponent"] = est.to_dict()
    theta = est.theta_hat

    def bound():
        c = orbit_constant(traj, theta, f_inf)
        if not c > 0:
            return {"skipped": "orbit constant is zero"}
        rep = check_bound(traj, c, theta)
        rep.notes["c"] = "smallest |grad f| / |f - f_inf|^theta along the orbit"
        return rep.to_dict()

    out["bound_check"] = _section(bound)
    return traj, out


def _flow_start(f: Poly, at: np.ndarray, cfg: Config, verdict=None) -> np.ndarray:
    if verdict is None:
        verdict = classify(f, at, options=cfg.classify)
    return attracting_start(f, at, cfg.flow.start_radius, verdict, cfg.classify)


# -- commands --------------------------------------------------------------

def cmd_analyze(args, cfg: Config) -> dict:
    f, at = _load(args, cfg)
    verdict = classify(f, at, options=cfg.classify)
    vd = verdict.to_dict()
    vd = {"kind": vd.pop("kind"), "label": verdict.label(), **vd}
    body = {"input": _input_echo(f, at), "verdict": vd}
    if verdict.kind is VerdictKind.CONSTANT:
        body["exponent_sampling"] = {"skipped": "f is constant near the point"}
    else:
        body["exponent_sampling"] = _section(lambda: estimate_sampling(f, at, cfg.sampling).to_dict())

    H = f.hessian(at)
    if np.any(H):
        C = quadratic_constant(H)
        body["inequality_check"] = verify_inequality(
            f, at, 0.5, C, options=cfg.sampling, atol=cfg.analyze.inequality_atol).to_dict()
    else:
        body["inequality_check"] = {"skipped": "Hessian vanishes; no quadratic constant"}

    run_flow = cfg.analyze.run_flow or args.flow
    if run_flow and verdict.kind is not VerdictKind.CONSTANT:
        def flow():
            return _flow_pipeline(f, _flow_start(f, at, cfg, verdict), cfg, f.eval(at))[1]
        fl = _section(flow)
        body["flow"] = fl
        if "error" in fl:
            body["exponent_flow"] = fl
            body["bound_check"] = fl
        else:
            body["exponent_flow"] = fl["exponent"] or fl["decay_fit"]
            body["bound_check"] = fl["bound_check"]
    else:
        skipped = {"skipped": "flow pipeline not requested"}
        body["exponent_flow"] = skipped
        body["bound_check"] = skipped
        body["flow"] = skipped
    body["config"] = to_dict(cfg)
    return body


def cmd_monomial(args, cfg: Config) -> dict:
    try:
        n = [int(s) for s in args.n.split(",")]
    except ValueError as exc:
        raise InputError(f"--n expects comma-separated integers, got {args.n!r}") from exc
    theta, N = monomial_exponent(n)
    return {"n": n, "N": N, "theta": theta, "theta_value": float(theta)}


def cmd_flow(args, cfg: Config) -> dict:
    f, at = _load(args, cfg)
    if args.t_end is not None:
        cfg = dataclasses.replace(cfg, flow=dataclasses.replace(cfg.flow, t_end=args.t_end))
    traj, fl = _flow_pipeline(f, at, cfg)
    if args.csv:
        Path(args.csv).write_text(traj.to_csv())
    if "error" in fl["decay_fit"] and args.format == "json":
        raise InsufficientDecay(fl["decay_fit"]["error"]["message"])
    body = {"input": _input_echo(f, at), "t_end": cfg.flow.t_end, "flow": fl, "config": to_dict(cfg)}
    body["_trajectory"] = traj  # removed before serialization
    return body


def cmd_reduce(args, cfg: Config) -> dict:
    f, at = _load(args, cfg)
    n = args.grid if args.grid is not None else cfg.reduce.grid
    opts = cfg.classify
    scale = max(1.0, f.max_abs_coeff())
    g = np.linalg.norm(f.grad_at(at))
    if g > opts.grad_tol * scale:
        raise NotCritical(f"|grad f(x0)| = {g:.6g} exceeds {opts.grad_tol * scale:.3g}")
    split = kernel_split(f.hessian(at), opts.kernel_tol, origin=at)
    chart = SplitChart(f, split, opts.split)
    k, c = split.rank, split.kernel_dim
    h, rows = chart.residual_grid(n, cfg.reduce.grid_fraction)
    axes = chart.grid_axes()
    return {"input": _input_echo(f, at), "kernel_dim": c, "rank": k,
            "trust_radius": chart.trust_radius, "half_width": h,
            "axes": [f"{a}{i + 1}" for a, i in axes],
            "max_residual": max(r["residual"] for r in rows),
            "max_factor_residual": max(r["factor_residual"] for r in rows),
            "rows": rows, "config": to_dict(cfg)}


def cmd_exponent(args, cfg: Config) -> dict:
    f, at = _load(args, cfg)
    if args.method == "flow":
        _, fl = _flow_pipeline(f, _flow_start(f, at, cfg), cfg, f.eval(at))
        if fl["exponent"] is None:
            raise InsufficientDecay(fl["decay_fit"]["error"]["message"])
        est = fl["exponent"]
    else:
        est = estimate_sampling(f, at, cfg.sampling).to_dict()
    return {"input": _input_echo(f, at), "estimate": est, "config": to_dict(cfg)}


COMMANDS = {"analyze": cmd_analyze, "monomial": cmd_monomial, "flow": cmd_flow,
            "reduce": cmd_reduce, "exponent": cmd_exponent}


# -- csv rendering ---------------------------------------------------------

def _csv(command: str, body: dict) -> str:
    out = io.StringIO()
    if command == "flow":
        return body["_trajectory"].to_csv()
    if command == "reduce":
        k, c = body["rank"], body["kernel_dim"]
        cols = [f"z{i + 1}" for i in range(k)] + [f"xi{i + 1}" for i in range(c)]
        out.write(",".join(cols + ["residual", "factor_residual"]) + "\n")
        for r in body["rows"]:
            vals = r["z"] + r["xi"] + [r["residual"], r["factor_residual"]]
            out.write(",".join("%.17g" % v for v in vals) + "\n")
        return out.getvalue()
    if command == "monomial":
        out.write("n,N,theta,theta_value\n")
        out.write(f"{' '.join(map(str, body['n']))},{body['N']},{body['theta']},"
                  f"{'%.17g' % body['theta_value']}\n")
        return out.getvalue()
    raise InputError(f"--format csv is not available for {command}")


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--poly", help="polynomial text, or @file")
    common.add_argument("--at", help="comma-separated critical point (default: origin)")
    common.add_argument("--dim", type=int, help="number of variables (default: inferred)")
    common.add_argument("--config", help="YAML config file (default: $LOJATOOL_CONFIG)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. sampling.n_bins=30")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--timings", action="store_true",
                        help="add wall-clock timings (outside the checksummed body)")

    p = argparse.ArgumentParser(prog="lojatool", description="Critical points of real polynomials: Morse-Bott tests, gradient-inequality "
                                "exponents and gradient-flow rates.")
    p.add_argument("--version", action="version", version=f"lojatool {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="classify and estimate exponents")
    a.add_argument("--flow", action="store_true", help="also run the gradient-flow pipeline")
    m = sub.add_parser("monomial", parents=[common], help="exact exponent of a monomial")
    m.add_argument("--n", required=True, help="multi-index, e.g. 2,1")
    fl = sub.add_parser("flow", parents=[common], help="integrate the gradient flow and fit its decay")
    fl.add_argument("--t-end", type=float, dest="t_end",
                    help="integration horizon (default: flow.t_end)")
    fl.add_argument("--csv", help="also write the trajectory CSV here")
    r = sub.add_parser("reduce", parents=[common], help="normal-form residual table")
    r.add_argument("--grid", type=int, help="points per axis")
    e = sub.add_parser("exponent", parents=[common], help="estimate the exponent")
    e.add_argument("--method", choices=["sampling", "flow"], default="sampling")
    return p


def _write(text: str, out: str | None, stream) -> None:
    if out:
        Path(out).write_text(text)
    else:
        stream.write(text)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config, args.set)
        body = COMMANDS[args.command](args, cfg)
        elapsed = time.perf_counter() - t0
        if args.format == "csv":
            _write(_csv(args.command, body), args.out, stdout)
            return EXIT_OK
        body.pop("_trajectory", None)
        rep = envelope(args.command, body, {"total_seconds": elapsed} if args.timings else None)
        _write(dumps(rep) + "\n", args.out, stdout)
        return EXIT_OK
    except (InputError, PolySyntaxError) as exc:
        stderr.write(dumps(error_object(exc)) + "\n")
        return EXIT_INPUT
    except (NumericalFailure, LojaError) as exc:
        stderr.write(dumps(error_object(exc)) + "\n")
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        stderr.write(dumps(error_object(exc, "numerical_failure")) + "\n")
        return EXIT_NUMERICAL
