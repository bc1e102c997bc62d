"""Command-line interface: ``stekopt {solve,info,bench,batch}``.

Exit codes: 0 success, 2 solver failure, 1 usage, input or parse error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bench
from . import convexify as cvx
from .poly import ParseError, Polynomial, load_poly
from .solve import SolveReport, SolverConfig, run_algorithm1, write_trace_csv

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _interval(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def _t0_arg(text: str):
    if text in ("auto", "ball"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--t0 takes auto, ball or a positive number, got {text!r}") from None
    if not v > 0.0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("--t0 must be positive")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0.0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--input", metavar="FILE", help="polynomial file (mqp or normal format)")
    g.add_argument("--problem", metavar="NAME", help="built-in problem: " + ", ".join(bench.PROBLEM_NAMES))
    g.add_argument("--seed-instance", type=int, metavar="SEED", help="random normal quartic with this instance seed")
    p.add_argument("--random-n", type=int, default=2, metavar="N", help="dimension for --seed-instance")
    p.add_argument("--ib", type=_interval, default=(-1.0, 1.0), metavar="LO,HI",
                   help="cross-term interval for --seed-instance")


def _add_solver(p):
    p.add_argument("--t0", type=_t0_arg, default="auto", metavar="auto|ball|VALUE")
    p.add_argument("--margin", type=float, default=cvx.DEFAULT_MARGIN)
    p.add_argument("--L", type=_positive, default=None, metavar="R", help="ball radius for the ball threshold")
    p.add_argument("--rtol", type=_positive, default=1e-12)
    p.add_argument("--atol", type=_positive, default=1e-12)
    p.add_argument("--polish", action="store_true", help="a few Newton steps on f at the endpoint")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stekopt", description="Global minimization of quartic polynomials by box smoothing")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run the full pipeline on one polynomial")
    _add_source(s)
    _add_solver(s)
    s.add_argument("--trace", metavar="FILE", help="write the trajectory as CSV")

    i = sub.add_parser("info", help="convexification data for a polynomial")
    _add_source(i)
    i.add_argument("--margin", type=float, default=cvx.DEFAULT_MARGIN)
    i.add_argument("--L", type=_positive, default=None, metavar="R")
    i.add_argument("--samples", type=int, default=1000, help="sample count for the null-space check")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="solve a built-in problem with its published settings")
    b.add_argument("--problem", required=True, metavar="NAME")
    _add_solver(b)
    b.add_argument("--out", metavar="FILE", help="also write the report (CSV, or JSON for *.json)")

    r = sub.add_parser("batch", help="failure statistics over random normal quartics")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--ib", type=_interval, required=True, metavar="LO,HI")
    r.add_argument("--count", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=None, help="worker processes (default: $STEKLOV_JOBS or 1)")
    r.add_argument("--out", metavar="FILE", help="write the stats (CSV, or JSON for *.json)")
    r.add_argument("--json", action="store_true")
    return p


def _glue_negative_values(argv):
    # "--ib -0.1,0.1" would otherwise be read as an option
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--ib":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--ib={nxt}")
        else:
            out.append(tok)
    return out


def _load_source(args) -> tuple[str, Polynomial, bench.ProblemSpec | None]:
    if args.input is not None:
        try:
            return args.input, load_poly(args.input), None
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc.strerror or exc}") from None
        except ParseError as exc:
            raise UsageError(f"{args.input}: {exc}") from None
    if args.problem is not None:
        spec = _problem(args.problem)
        return spec.name, spec.polynomial, spec
    if args.random_n < 2:
        raise UsageError("--random-n must be >= 2")
    f = bench.random_normal(args.random_n, args.ib, args.seed_instance)
    return f"random(n={args.random_n}, ib={args.ib}, seed={args.seed_instance})", f, None


def _problem(name) -> bench.ProblemSpec:
    try:
        return bench.builtin_problem(name)
    except (bench.UnknownProblemError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _config(args, trace=False) -> SolverConfig:
    kw = dict(margin=args.margin, L=args.L, ode_rtol=args.rtol, ode_atol=args.atol,
              polish=args.polish, trace_every=1 if trace else None)
    if isinstance(args.t0, float):
        kw.update(t0_mode="user", t0=args.t0)
    else:
        kw.update(t0_mode=args.t0)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.15g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _print_report(label, rep: SolveReport, as_json, out):
    if as_json:
        out.write(json.dumps(rep.to_dict(), indent=2) + "\n")
        return
    out.write(f"problem: {label}\n")
    for k, v in rep.to_dict().items():
        if v is None or v == "":
            continue
        out.write(f"{k}: {_fmt(v)}\n")


def cmd_solve(args, out) -> int:
    label, f, _ = _load_source(args)
    rep = run_algorithm1(f, _config(args, trace=bool(args.trace)))
    if args.trace and rep.trajectory is not None:
        write_trace_csv(rep.trajectory, args.trace)
    _print_report(label, rep, args.json, out)
    if not rep.success:
        sys.stderr.write(f"solver failure: {rep.reason}\n")
    return EXIT_OK if rep.success else EXIT_FAILURE


def _info(f: Polynomial, args) -> dict:
    spec = cvx.classify_C(f)
    eig = np.linalg.eigvalsh(f.c_matrix())
    d = {
        "n": f.n,
        "C_eigenvalues": eig.tolist(),
        "lambda_min_C": spec.lambda_min_C,
        "lambda_max_C": spec.lambda_max_C,
        "classification": spec.classification.value,
        "note": spec.note,
        "kappa": f.quartic_tail_kappa(),
    }
    normal = f.to_normal()
    L = args.L
    if normal is not None and float(normal.a.min()) > 0.0:
        plan = cvx.t0_normal(normal, args.margin) if args.margin > 0 else cvx.t0_normal(normal, 0.0)
        L_inf, eps = cvx.ball_radius_normal(normal)
        d.update(t0_normal_bound=plan.bound, t0_normal=plan.t0, L_inf=L_inf, eps_hat=eps)
        if L is None:
            L = math.sqrt(f.n) * L_inf
    if spec.classification is cvx.Classification.POSITIVE_DEFINITE and L is not None:
        theta = cvx.theta_L_estimate(normal if normal is not None else f, L, rng=args.seed)
        plan = cvx.t0_ball(theta.value, spec.lambda_min_C, args.margin, L=L, theta_guaranteed=theta.guaranteed)
        d.update(ball_L=L, theta_L=theta.value, theta_guaranteed=theta.guaranteed,
                 t0_ball_bound=plan.bound, t0_ball=plan.t0)
    if spec.classification is cvx.Classification.SINGULAR_PSD:
        radius = L if L is not None else 1.0
        phi, (alpha, x) = cvx.null_space_condition_sample(f, radius, args.samples, rng=args.seed)
        d.update(null_space_dim=spec.null_dim_estimate, null_space_L=radius, null_space_min_phi=phi,
                 null_space_witness_alpha=alpha.tolist(), null_space_witness_x=x.tolist())
    return d


def cmd_info(args, out) -> int:
    label, f, _ = _load_source(args)
    d = _info(f, args)
    if args.json:
        out.write(json.dumps(d, indent=2) + "\n")
    else:
        out.write(f"problem: {label}\n")
        for k, v in d.items():
            out.write(f"{k}: {_fmt(v)}\n")
    return EXIT_OK


def _write_out(path, items):
    fmt = "json" if path.endswith(".json") else "csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(bench.emit_report(items, fmt))


def cmd_bench(args, out) -> int:
    spec = _problem(args.problem)
    rep = bench.run_problem(spec, _config(args))
    _print_report(spec.name, rep, args.json, out)
    if not args.json:
        if spec.known_value is not None:
            out.write(f"known_value: {spec.known_value!r} ({spec.known_source})\n")
        if spec.alt_value is not None:
            out.write(f"better_known_value: {spec.alt_value!r}\n")
        if spec.notes:
            out.write(f"notes: {spec.notes}\n")
    if args.out:
        _write_out(args.out, [rep])
    return EXIT_OK if rep.success else EXIT_FAILURE


def cmd_batch(args, out) -> int:
    if args.n < 2 or args.count < 1:
        raise UsageError("--n must be >= 2 and --count >= 1")
    jobs = args.jobs if args.jobs is not None else bench.default_jobs()
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    stats = bench.batch_run(args.n, args.ib, args.count, args.seed, jobs=jobs)
    out.write(bench.emit_report(stats, "json" if args.json else "csv"))
    if stats.seeds_of_failures and not args.json:
        out.write("failed instance seeds: " + " ".join(map(str, stats.seeds_of_failures)) + "\n")
    if args.out:
        _write_out(args.out, stats)
    return EXIT_OK


_COMMANDS = {"solve": cmd_solve, "info": cmd_info, "bench": cmd_bench, "batch": cmd_batch}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        sys.stderr.write(f"stekopt: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
