"""Command-line front end: ``kppwaves <subcommand> CONFIG [options]``.

Exit codes: 0 success, 1 input error, 2 proven or declared nonexistence of
a travelling wave, 3 numerical failure. Every file written is accompanied
by a JSON sidecar holding the run manifest; timings go to stderr only so
that repeated runs produce identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .asymptotics import Existence, Region1, classify, classify_spec, estimate_exponent
from .config import load_config
from .errors import InputError, KPPWavesError, NonpositiveSpeed, OutOfDomain, SpeedBelowCritical
from .pde import initial_state, shape_error, simulate
from .phase import critical_speed, solve_phase
from .problem import ProblemSpec, composite, compute_mu, validate_spec
from .profile import reconstruct_profile, residual_integral_form

DEFAULTS = {"tol": 1e-10, "tol_c": 1e-6, "rmin": 1e-6, "eps_seed": 1e-6,
            "tmax": 200.0, "h": 0.05, "length": 200.0}


# helpers --------------------------------------------------------------------

def _solver_options(args):
    return {"tol": args.tol, "r_min": args.rmin, "eps_seed": args.eps_seed}


def _load(args) -> ProblemSpec:
    spec = load_config(args.config)
    validate_spec(spec)
    return spec


def _manifest(args, outputs=(), counters=None):
    path = Path(args.config)
    digest = hashlib.sha256(path.read_bytes()).hexdigest() if path.is_file() else None
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "config", "out", "command")}
    return {"subcommand": args.command, "config": str(args.config), "config_sha256": digest,
            "parameters": params, "outputs": [str(p) for p in outputs],
            "counters": counters or {}}


def _emit(payload, args, extra_outputs=(), counters=None):
    """Print ``payload`` as JSON, or write it (with manifest) to ``--out``."""
    out = getattr(args, "out", None)
    if out:
        payload = dict(payload, manifest=_manifest(args, [out, *extra_outputs], counters))
        io.write_json(out, payload)
    else:
        print(io.dumps(payload))


def _parse_range(text, name):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise InputError(f"bad --grid-spec entry {name}={text!r}; expected a:b:n") from None
    if n < 0:
        raise InputError(f"--grid-spec {name}: n must be >= 0")
    return np.linspace(a, b, n)


def parse_grid_spec(text: str, default_g1: float, default_d1: float):
    """``"g1=a:b:n,d1=a:b:n"`` to the list of ``(gamma1, delta1)`` cells (row-major)."""
    axes = {"g1": np.array([default_g1]), "d1": np.array([default_d1])}
    if text:
        for part in text.split(","):
            if "=" not in part:
                raise InputError(f"bad --grid-spec entry {part!r}; expected name=a:b:n")
            name, rng = (s.strip() for s in part.split("=", 1))
            if name not in axes:
                raise InputError(f"--grid-spec axis must be g1 or d1, got {name!r}")
            axes[name] = _parse_range(rng, name)
    return [(float(g), float(d)) for g in axes["g1"] for d in axes["d1"]]


def _thread_cap():
    raw = os.environ.get("KPPWAVES_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"KPPWAVES_THREADS must be an integer, got {raw!r}") from None


# subcommands ----------------------------------------------------------------

def cmd_analyze(args, with_mu=True):
    spec = _load(args)
    report = classify_spec(spec)
    payload = {"classification": report.as_dict(), "existence": report.existence.value}
    lines = [f"region0: {report.region0.value}", f"region1: {report.region1.value}"]
    if with_mu:
        mu = compute_mu(composite(spec))
        payload["mu"] = mu
        payload["speed_upper_bound"] = 2 * math.sqrt(mu)
        lines.append(f"mu: {mu!r}")
        lines.append(f"speed upper bound 2*sqrt(mu): {2 * math.sqrt(mu)!r}")
    lines.append(f"existence: {report.existence.value}")
    z0 = {True: "finite", False: "infinite", None: "undetermined"}[report.z0_finite]
    lines.append(f"z0: {z0}")
    lines.append(f"predicted theta: {report.predicted_theta!r}")
    if report.borderline:
        lines.append("borderline: " + ", ".join(report.borderline))
    print("\n".join(lines))
    if args.out:
        io.write_json(args.out, dict(payload, manifest=_manifest(args, [args.out])))
    return 2 if report.existence is Existence.NO_WAVE else 0


def cmd_classify(args):
    return cmd_analyze(args, with_mu=False)


def cmd_speed(args):
    spec = _load(args)
    result = critical_speed(composite(spec), tol_c=args.tol_c, **_solver_options(args))
    _emit(result.as_dict(), args, counters={"bisections": result.iterations})
    return 0


def _solve_profile(spec, args):
    f = composite(spec)
    opts = _solver_options(args)
    if args.c is not None and not args.c > 0:
        raise NonpositiveSpeed(f"wave speed must be positive, got c={args.c!r}")
    sr = critical_speed(f, tol_c=args.tol_c, **opts)
    c = sr.bracket[1] if args.c is None else args.c
    if c < sr.bracket[0]:
        raise SpeedBelowCritical(c, sr.c_star)
    ps = solve_phase(f, c, **opts)
    if not ps.reached_zero:
        raise SpeedBelowCritical(c, sr.c_star)
    return sr, ps, reconstruct_profile(spec, ps)


def cmd_profile(args):
    spec = _load(args)
    sr, ps, wp = _solve_profile(spec, args)
    res_def, res_speed = residual_integral_form(spec, wp)
    report = classify_spec(spec)
    payload = {
        "c": wp.c, "c_star": sr.c_star, "z0": wp.z0, "z1": wp.z1,
        "z0_finite": wp.z0_finite, "z1_finite": wp.z1_finite,
        "z0_numeric_finite": wp.z0_numeric_finite, "z0_agreement": wp.z0_agreement,
        "residuals": {"res_def": res_def, "res_speed": res_speed},
        "classification": report.as_dict(), "samples": len(wp.z),
    }
    counters = {"bisections": sr.iterations, "phase_nfev": ps.nfev}
    if args.out:
        io.write_csv(args.out, ["z", "U"], [wp.z, wp.U])
        meta = io.sidecar(args.out)
        payload["manifest"] = _manifest(args, [args.out, meta], counters)
        io.write_json(meta, payload)
    else:
        print(io.dumps(payload))
    return 0


def cmd_simulate(args):
    spec = _load(args)
    u0 = None
    if args.initial == "one":
        u0 = np.ones_like(initial_state(args.length, args.h).x_grid)
    times = [float(t) for t in args.snapshots.split(",")] if args.snapshots else []
    result = simulate(spec, args.tmax, h=args.h, length=args.length, u0=u0,
                      window=args.window, snapshot_times=times)
    payload = {"c_measured": result.c_measured, "stderr": result.stderr,
               "t_final": result.state.t, "dt": result.dt, "steps": result.steps}
    if args.compare:
        _, _, wp = _solve_profile(spec, args)
        payload["c_profile"] = wp.c
        payload["shape_error"] = shape_error(result.state, wp)
    counters = {"steps": result.steps}
    if args.out:
        out = Path(args.out)
        hist = result.state.history_array()
        io.write_csv(out, ["t", "x_front"], [hist[:, 0], hist[:, 1]])
        written = [out]
        for i, t in enumerate(sorted(result.snapshots)):
            x, u = result.snapshots[t]
            snap = out.with_name(f"{out.stem}_snapshot{i}.csv")
            io.write_csv(snap, ["x", "u"], [x, u])
            written.append(snap)
        meta = io.sidecar(out)
        payload["snapshot_times"] = sorted(result.snapshots)
        payload["manifest"] = _manifest(args, [*written, meta], counters)
        io.write_json(meta, payload)
    else:
        print(io.dumps(payload))
    return 0


def _sweep_cell(job):
    gamma0, delta0, gamma1, delta1, solve, opts, tol_c = job
    row = {"gamma1": gamma1, "delta1": delta1, "region": Region1.INVALID.value,
           "z0_finite": "", "predicted_theta": math.nan, "theta_hat": math.nan, "note": ""}
    try:
        report = classify(gamma0, delta0, gamma1, delta1)
    except OutOfDomain:
        row["note"] = "inadmissible"
        return row
    row.update(region=report.region1.value, predicted_theta=report.predicted_theta,
               z0_finite="" if report.z0_finite is None else str(report.z0_finite).lower())
    if solve and report.existence is Existence.EXISTS:
        spec = ProblemSpec.power(gamma0, delta0, gamma1, delta1)
        try:
            f = composite(spec)
            sr = critical_speed(f, tol_c=tol_c, **opts)
            ps = solve_phase(f, sr.bracket[1], **opts)
            row["theta_hat"] = estimate_exponent(ps)[0]
        except KPPWavesError as exc:
            row["note"] = type(exc).__name__
    elif report.existence is Existence.NO_WAVE:
        row["note"] = "no wave"
    return row


def cmd_sweep(args):
    spec = load_config(args.config)
    cells = parse_grid_spec(args.grid_spec, spec.gamma1, spec.delta1)
    jobs = [(spec.gamma0, spec.delta0, g1, d1, args.solve, _solver_options(args), args.tol_c)
            for g1, d1 in cells]
    workers = min(_thread_cap(), max(len(jobs), 1))
    if args.solve and workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(job) for job in jobs]
    header = ["gamma1", "delta1", "region", "z0_finite", "predicted_theta", "theta_hat", "note"]

    def cell(v):
        return io.format_float(v) if isinstance(v, float) else str(v)

    if args.out:
        out = Path(args.out)
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([cell(row[k]) for k in header])
        meta = io.sidecar(out)
        io.write_json(meta, {"cells": len(rows),
                             "manifest": _manifest(args, [out, meta], {"cells": len(rows)})})
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell(row[k]) for k in header])
    return 0


# argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="problem configuration file")
    common.add_argument("--tol", type=float, default=DEFAULTS["tol"],
                        help="absolute tolerance of the phase-plane integration (default %(default)g)")
    common.add_argument("--tol-c", type=float, default=DEFAULTS["tol_c"],
                        help="bisection tolerance on the speed (default %(default)g)")
    common.add_argument("--rmin", type=float, default=DEFAULTS["rmin"],
                        help="smallest sampled r of the phase solution (default %(default)g)")
    common.add_argument("--eps-seed", type=float, default=DEFAULTS["eps_seed"],
                        help="seed distance from r = 1 (default %(default)g)")
    common.add_argument("--out", help="output file (JSON, or CSV plus a JSON sidecar)")

    parser = argparse.ArgumentParser(prog="kppwaves", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="classify regions, mu and existence")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("classify", parents=[common], help="like analyze, without mu")
    p.set_defaults(func=cmd_classify)
    p = sub.add_parser("speed", parents=[common], help="critical speed by bisection")
    p.set_defaults(func=cmd_speed)

    p = sub.add_parser("profile", parents=[common], help="wave profile at speed --c")
    p.add_argument("--c", type=float, help="wave speed (default: just above c*)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", parents=[common], help="finite-difference front simulation")
    p.add_argument("--tmax", type=float, default=DEFAULTS["tmax"])
    p.add_argument("--h", type=float, default=DEFAULTS["h"])
    p.add_argument("--length", type=float, default=DEFAULTS["length"])
    p.add_argument("--window", type=float, help="speed-fit window (default tmax/2)")
    p.add_argument("--initial", choices=("step", "one"), default="step")
    p.add_argument("--snapshots", help="comma-separated output times")
    p.add_argument("--compare", action="store_true",
                   help="also compare the final front with the reconstructed profile")
    p.add_argument("--c", type=float, help="profile speed for --compare")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="region map over (gamma1, delta1)")
    p.add_argument("--grid-spec", default="", help='e.g. "g1=0.25:2:8,d1=-0.5:1.5:9"')
    p.add_argument("--solve", action="store_true", help="attach fitted exponents per cell")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    start = time.perf_counter()
    try:
        code = args.func(args)
    except KPPWavesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = exc.exit_code
    except FloatingPointError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        code = 3
    print(f"[{args.command}] {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
