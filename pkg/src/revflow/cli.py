"""Command-line front end: ``revflow <subcommand> ...``.

Tabular output is CSV (``#``-prefixed metadata lines, then a header row),
structured output is JSON; every float is written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, billiard, carleman, experiments, geodesic, period
from .errors import RevflowError
from .surface import (DEFAULT_GRID_N, ProfileFunction, load_surface,
                      validate_profile)

TWO_PI = 2.0 * math.pi
SEED_ENV = "REVFLOW_SEED"


class UsageError(Exception):
    """Bad command-line input detected after argument parsing."""


# formatting -------------------------------------------------------------------

def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def to_json(obj, indent=0):
    """JSON text with 17-significant-digit floats and ``null`` for non-finite."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _open(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def write_csv(path, meta, header, rows):
    fh, close = _open(path)
    try:
        for k, v in meta.items():
            fh.write(f"# {k}={v if isinstance(v, str) else to_json(v)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    finally:
        if close:
            fh.close()


def write_json(path, doc):
    fh, close = _open(path)
    try:
        fh.write(to_json(doc) + "\n")
    finally:
        if close:
            fh.close()


# shared arguments ------------------------------------------------------------

def resolve_seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None,
                   help=f"random seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for scans")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    return p


def _start_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=float, help="equator angle of the start")
    g.add_argument("--point", type=float, nargs=4,
                   metavar=("THETA", "PHI", "P_THETA", "P_PHI"), help="raw phase point")
    p.add_argument("--phi0", type=float, default=0.0, help="longitude of the equator start")
    p.add_argument("--direction", type=int, choices=(1, -1), default=1)


def _start(surface, args):
    if args.point is not None:
        return geodesic.PhasePoint(*args.point)
    return geodesic.equator_to_phase(
        surface, geodesic.EquatorData(args.alpha, args.phi0, args.direction))


def _start_meta(args):
    if args.point is not None:
        return {"point": list(args.point)}
    return {"alpha": args.alpha, "phi0": args.phi0, "direction": args.direction}


def _t_eval(t_end, samples):
    if samples is None:
        return None
    return np.linspace(0.0, t_end, samples) if t_end >= 0 else None


def _events_path(args):
    if args.events:
        return args.events
    if args.out not in (None, "-"):
        return str(Path(args.out).with_suffix(".events.json"))
    return None


# subcommands -----------------------------------------------------------------

def cmd_surface(args):
    if args.action != "validate":
        raise UsageError(f"surface: unknown action {args.action!r}")
    with open(args.file) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.file}: malformed JSON ({exc})") from None
    profile = ProfileFunction.from_dict(doc)
    grid_n = int(doc.get("grid_n", DEFAULT_GRID_N))
    report = validate_profile(profile, grid_n, float(doc.get("theta_max", math.pi / 2 - 0.05)))
    try:
        load_surface(args.file)
        failure = None
    except RevflowError as exc:
        failure = str(exc)
    write_json(args.out, {"file": str(args.file), "surface": doc,
                          "validation": {**report.to_dict(), "ok": failure is None},
                          "error": failure})
    if failure:
        print(f"error: surface: {failure}", file=sys.stderr)
        return 1
    return 0


def cmd_trace(args):
    surface = load_surface(args.surface)
    p0 = _start(surface, args)
    traj = geodesic.flow(surface, p0, args.t_end, args.tol,
                         t_eval=_t_eval(args.t_end, args.samples))
    meta = {"command": "trace", "surface": str(args.surface), "t_end": args.t_end,
            "tol": args.tol, **_start_meta(args)}
    write_csv(args.out, meta, ["t", "theta", "phi", "p_theta", "p_phi"],
              ([t, *y] for t, y in zip(traj.t, traj.states)))
    events = _events_path(args)
    if events:
        write_json(events, {**meta, "stop": traj.stop, "energy_drift": traj.energy_drift,
                            "clairaut_drift": traj.clairaut_drift,
                            "events": [e.to_dict() for e in traj.events]})
    return 0


def cmd_billiard(args):
    surface = load_surface(args.surface)
    half = billiard.HalfSurface(surface)
    p0 = _start(surface, args)
    bt = billiard.billiard_flow(half, p0, args.t_end, args.tol,
                                t_eval=_t_eval(args.t_end, args.samples),
                                max_reflections=args.max_reflections)
    meta = {"command": "billiard", "surface": str(args.surface), "t_end": args.t_end,
            "tol": args.tol, **_start_meta(args)}
    write_csv(args.out, meta, ["t", "arc", "theta", "phi", "p_theta", "p_phi"],
              ([t, int(a), *y] for t, a, y in zip(bt.t, bt.arc_index, bt.states)))
    events = _events_path(args)
    if events:
        # reflections carry their pre/post momenta, so use the detailed records
        log = sorted([e.to_dict() for e in bt.events if e.kind != "reflection"]
                     + [r.to_dict() for r in bt.reflections], key=lambda e: e["t"])
        write_json(events, {**meta, "stop": bt.stop, "grazing": bt.grazing,
                            "dead_end": bt.dead_end, "reflections": bt.n_reflections,
                            "energy_drift": bt.energy_drift, "events": log})
    return 1 if bt.grazing or bt.dead_end else 0


def _classification_fields(rec):
    c = rec.classification
    return "error" if c is None else str(c)


def cmd_period_scan(args):
    surface = load_surface(args.surface)
    if not args.n >= 1:
        raise UsageError("--n must be positive")
    if args.endpoints:
        grid = np.linspace(args.alpha_min, args.alpha_max, args.n)
    else:
        grid = np.linspace(args.alpha_min, args.alpha_max, args.n + 2)[1:-1]
    records = period.scan(surface, grid, args.tol, args.k_max, args.resonance_tol,
                          jobs=args.jobs)
    meta = {"command": "period-scan", "surface": str(args.surface), "tol": args.tol,
            "k_max": args.k_max, "resonance_tol": args.resonance_tol,
            "resonant_fraction": period.resonant_fraction(records)}
    write_csv(args.out, meta,
              ["alpha", "T_star", "R", "rot_frac_p", "rot_frac_q", "classification"],
              ([r.alpha, r.T_star, r.R, r.rot_p, r.rot_q, _classification_fields(r)]
               for r in records))
    return 0


def cmd_classify(args):
    surface = load_surface(args.surface)
    rec = period.period_record(surface, args.alpha, args.tol, args.k_max,
                               args.resonance_tol)
    if rec.error:
        raise period.NumericalError(rec.error)
    c = rec.classification
    write_json(args.out, {
        "surface": str(args.surface), "tol": args.tol, "k_max": args.k_max,
        "resonance_tol": args.resonance_tol, "alpha": rec.alpha, "T_star": rec.T_star,
        "R": rec.R, "rot_frac_p": rec.rot_p, "rot_frac_q": rec.rot_q,
        "rot_frac_error": rec.rot_error, "classification": c.kind, "k": c.k,
        "full_period": c.full_period})
    return 0


def cmd_jet(args):
    surface = load_surface(args.surface)
    p0 = _start(surface, args)
    rep = analysis.jet_norms(surface, p0, args.T, args.K, args.fd_step, args.tol,
                             args.jet_tol)
    write_json(args.out, {"surface": str(args.surface), "seed": resolve_seed(args),
                          "tol": args.tol, **rep.to_dict()})
    return 0


def cmd_return_time(args):
    surface = load_surface(args.surface)
    p0 = _start(surface, args)
    rt = analysis.return_time(surface, p0, args.T_guess, args.radius, args.tol,
                              args.grad_step)
    write_json(args.out, {"surface": str(args.surface), "seed": resolve_seed(args),
                          "tol": args.tol, "T_guess": args.T_guess,
                          "search_radius": args.radius, "grad_step": args.grad_step,
                          "start": list(p0.as_array()), "t_star": rt.t_star,
                          "d_min": rt.d_min, "gradient": list(rt.gradient),
                          "gradient_norm": rt.gradient_norm})
    return 0


def cmd_measure(args):
    surface = load_surface(args.surface)
    rep = analysis.estimate_measure(surface, args.T, args.n, args.tol, args.k_max,
                                    resolve_seed(args), args.resonance_tol,
                                    jobs=args.jobs)
    write_json(args.out, {"surface": str(args.surface), **rep.to_dict()})
    return 0


def cmd_curvature(args):
    surface = load_surface(args.surface)
    half = billiard.HalfSurface(surface)
    seed = resolve_seed(args)
    if args.theta is not None:
        if args.xi is None or len(args.xi) != len(args.theta):
            raise UsageError("--xi must give one value per --theta")
        pairs = list(zip(args.theta, args.xi))
    else:
        rng = np.random.default_rng(seed)
        lim = 0.9 * surface.theta_max
        pairs = [(float(rng.uniform(-lim, lim)),
                  float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0)))
                 for _ in range(args.n)]
    rows = []
    for theta, xi in pairs:
        if xi == 0.0:
            raise UsageError("--xi: tangential covector must be nonzero")
        s = billiard.hamiltonian_curvature(half, theta, xi, args.fd_step)
        rows.append([s.theta, s.xi_tan, s.k])
    meta = {"command": "curvature", "surface": str(args.surface), "seed": seed,
            "fd_step": args.fd_step}
    write_csv(args.out, meta, ["theta", "xi_tan", "k"], rows)
    return 0


def _sequence(args):
    if args.kind == "factorial":
        return carleman.CarlemanSequence.factorial()
    if args.kind == "gevrey":
        if args.s is None:
            raise UsageError("--s is required for kind gevrey")
        return carleman.CarlemanSequence.gevrey(args.s)
    if args.values_file:
        with open(args.values_file) as fh:
            vals = [float(v) for v in fh.read().replace(",", " ").split()]
    elif args.values:
        vals = args.values
    else:
        raise UsageError("--values or --values-file is required for kind explicit")
    return carleman.CarlemanSequence.explicit(vals)


def cmd_carleman(args):
    seq = _sequence(args)
    doc = carleman.report(seq, args.N, args.sums_N, args.tol)
    write_json(args.out, {"N": args.N, "sums_N": args.sums_N, "tol": args.tol, **doc})
    return 0


def cmd_repro(args):
    run_fn, cfg_cls = experiments.EXPERIMENTS[args.experiment]
    kwargs = {"seed": resolve_seed(args)}
    if args.surface:
        kwargs["surface"] = args.surface
    if args.experiment == "thm47":
        kwargs["jobs"] = args.jobs
    summary = run_fn(cfg_cls(**kwargs))
    for c in summary.checks:
        print(c.line(), file=sys.stderr if args.out == "-" else sys.stdout)
    print(f"{args.experiment}: {'PASS' if summary.passed else 'FAIL'}",
          file=sys.stderr if args.out == "-" else sys.stdout)
    write_json(args.out, summary.to_dict())
    return 0 if summary.passed else 1


# parser ------------------------------------------------------------------------

def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="revflow",
        description="Geodesic flows and billiards on surfaces of revolution.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", required=True)

    p = sub.add_parser("surface", parents=[common], help="validate a surface document")
    p.add_argument("action", choices=["validate"])
    p.add_argument("file")
    p.set_defaults(func=cmd_surface)

    for name, func, doc in (("trace", cmd_trace, "trace a geodesic"),
                            ("billiard", cmd_billiard, "trace a half-surface billiard")):
        p = sub.add_parser(name, parents=[common], help=doc)
        p.add_argument("surface")
        _start_args(p)
        p.add_argument("--t-end", type=float, required=True)
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--samples", type=int, default=None,
                       help="sample on a uniform grid of this size instead of the steps")
        p.add_argument("--events", default=None, help="JSON event log path")
        if name == "billiard":
            p.add_argument("--max-reflections", type=int, default=billiard.MAX_REFLECTIONS)
        p.set_defaults(func=func)

    p = sub.add_parser("period-scan", parents=[common], help="scan T and R over alpha")
    p.add_argument("surface")
    p.add_argument("--alpha-min", type=float, required=True)
    p.add_argument("--alpha-max", type=float, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--endpoints", action="store_true", help="include the grid endpoints")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--resonance-tol", type=float, default=period.DEFAULT_RESONANCE_TOL)
    p.set_defaults(func=cmd_period_scan)

    p = sub.add_parser("classify", parents=[common], help="classify a single alpha")
    p.add_argument("surface")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--resonance-tol", type=float, default=period.DEFAULT_RESONANCE_TOL)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("jet", parents=[common], help="finite-difference jet of D")
    p.add_argument("surface")
    _start_args(p)
    p.add_argument("--T", type=float, default=TWO_PI)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--fd-step", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--jet-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_jet)

    p = sub.add_parser("return-time", parents=[common], help="closest-approach time")
    p.add_argument("surface")
    _start_args(p)
    p.add_argument("--T-guess", type=float, default=TWO_PI)
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--grad-step", type=float, default=1e-4)
    p.set_defaults(func=cmd_return_time)

    p = sub.add_parser("measure", parents=[common], help="Monte-Carlo periodic measure")
    p.add_argument("surface")
    p.add_argument("--T", type=float, default=TWO_PI)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--resonance-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("curvature", parents=[common], help="boundary Hamiltonian curvature")
    p.add_argument("surface")
    p.add_argument("--theta", type=float, nargs="+", default=None)
    p.add_argument("--xi", type=float, nargs="+", default=None)
    p.add_argument("--n", type=int, default=20, help="random samples when --theta is absent")
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("carleman", parents=[common], help="Carleman sequence report")
    p.add_argument("--kind", choices=["factorial", "gevrey", "explicit"], required=True)
    p.add_argument("--s", type=float, default=None, help="Gevrey exponent")
    p.add_argument("--values", type=float, nargs="+", default=None)
    p.add_argument("--values-file", default=None)
    p.add_argument("--N", type=int, default=50, help="range of the regularity checks")
    p.add_argument("--sums-N", type=int, default=1024, help="range of the partial sums")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_carleman)

    p = sub.add_parser("repro", parents=[common], help="run a packaged experiment")
    p.add_argument("experiment", choices=sorted(experiments.EXPERIMENTS))
    p.add_argument("--surface", default=None, help="override the packaged bump surface")
    p.set_defaults(func=cmd_repro)
    return parser


def run(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, RevflowError, ValueError, OSError, KeyError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
