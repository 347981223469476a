"""Command-line entry point: ``perturb-osc {freq,sweep,order-scan,oracle}``.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import shlex
import sys
import warnings
from fractions import Fraction

from . import __version__
from .conservative import ORDER_CAP, NoStationaryPoint, OscillatorSpec
from .experiments import (DEFAULT_GRIDS, SCAN_COLUMNS, SWEEP_COLUMNS, SYSTEMS,
                          SweepConfig, UsageError, compute, fmt, methods_for,
                          order_scan, resolve_lambda, sweep, to_csv, write_text)
from .oracle import (OracleError, StiffnessWarning, default_vdp_tol,
                     duffing_exact_elliptic, exact_frequency_quadrature,
                     frequency_by_integration, vdp_limit_cycle_period)

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _lambda_arg(text):
    if text == "pms":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'pms', got {text!r}")


def _common(p, methods_repeatable):
    p.add_argument("--system", choices=sorted(SYSTEMS), default="duffing")
    if methods_repeatable:
        p.add_argument("--method", action="append", choices=["lpt", "lplde", "alpt"],
                       help="repeatable; default: all methods for the system")
    p.add_argument("--lambda", dest="lam", type=_lambda_arg, default=None,
                   help="LPLDE variational parameter or 'pms'")
    p.add_argument("--arith", choices=["float", "rational"], default="float")
    p.add_argument("--tol", type=float, default=None, help="oracle tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="perturb-osc",
                     description="Perturbative frequencies of nonlinear oscillators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("freq", help="single frequency / period query")
    _common(p, methods_repeatable=False)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--method", choices=["lpt", "lplde", "alpt"], required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--format", choices=["text", "csv"], default="text")

    p = sub.add_parser("sweep", help="error versus coupling (CSV)")
    _common(p, methods_repeatable=True)
    p.add_argument("--mu-min", type=float)
    p.add_argument("--mu-max", type=float)
    p.add_argument("--mu-count", type=int)
    p.add_argument("--mu-scale", choices=["linear", "log"])
    p.add_argument("--order", type=int, default=20)
    p.add_argument("--out", default="-")

    p = sub.add_parser("order-scan", help="error versus order (CSV)")
    _common(p, methods_repeatable=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--order", type=int, default=20, help="maximum order")
    p.add_argument("--out", default="-")

    p = sub.add_parser("oracle", help="reference values only")
    p.add_argument("--system", choices=sorted(SYSTEMS), default="duffing")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--tol", type=float, default=None)
    return parser


def _check_order(order, low=0):
    if not low <= order <= ORDER_CAP:
        raise UsageError(f"order must be in {low}..{ORDER_CAP}")


def _check_mu(system, mu):
    if system == "vdp":
        if not mu >= 0:
            raise UsageError("Van der Pol needs mu >= 0")
    elif not mu > -1:
        raise UsageError("conservative oscillators need mu > -1")


def _show(value):
    if isinstance(value, Fraction):
        return str(value)
    return fmt(value)


def cmd_freq(args, out) -> int:
    _check_mu(args.system, args.mu)
    _check_order(args.order, 1 if args.system == "vdp" else 0)
    if args.system == "vdp" and args.method == "lpt":
        raise UsageError("Van der Pol supports lplde and alpt")
    if args.arith == "rational" and (args.system == "vdp" or args.method == "alpt"):
        raise UsageError("rational arithmetic only applies to lpt/lplde on conservative systems")
    lam_sq = None
    if args.lam is not None:
        lam_sq = resolve_lambda(args.system, args.mu, args.lam)
    rec = compute(args.system, args.mu, args.method, args.order, lam_sq=lam_sq,
                  arith=args.arith, tol=args.tol)
    if args.format == "csv":
        cols = ("system", "mu", "method", "order", "omega", "period",
                "omega_oracle", "delta", "converged", "lambda_used")
        out.write(",".join(cols) + "\n")
        out.write(",".join(fmt(getattr(rec, c)) for c in cols) + "\n")
    else:
        # VdP LPLDE expands Omega itself, everything else Omega**2
        label = "Omega" if (args.system, args.method) == ("vdp", "lplde") else "Omega^2"
        out.write(f"system        {rec.system}\n")
        out.write(f"mu            {fmt(rec.mu)}\n")
        out.write(f"method        {rec.method}\n")
        out.write(f"order         {rec.order}\n")
        if rec.lambda_used is not None:
            out.write(f"lambda        {fmt(rec.lambda_used)}\n")
        out.write(f"omega         {fmt(rec.omega)}\n")
        out.write(f"period        {fmt(rec.period)}\n")
        if rec.amplitude is not None:
            out.write(f"amplitude     {fmt(rec.amplitude)}\n")
        out.write(f"omega_oracle  {fmt(rec.omega_oracle)}\n")
        out.write(f"delta         {fmt(rec.delta)}\n")
        out.write(f"converged     {fmt(rec.converged)}\n")
        for n, v in enumerate(rec.partials):
            out.write(f"{label}[{n}]".ljust(14) + f"{_show(v)}\n")
        if rec.note:
            out.write(f"note          {rec.note}\n")
    if not rec.converged:
        sys.stderr.write(f"perturb-osc: {args.method} did not converge "
                         f"(system={args.system}, mu={args.mu}, order={args.order}): "
                         f"{rec.note or 'non-positive frequency'}\n")
        return EXIT_NUMERIC
    return 0


def _sweep_config(args) -> SweepConfig:
    if args.system == "vdp":
        grid = DEFAULT_GRIDS["vdp"]
    elif args.mu_min is not None and args.mu_min < 0:
        grid = DEFAULT_GRIDS["negative"]
    else:
        grid = DEFAULT_GRIDS["positive"]
    mu_min = args.mu_min if args.mu_min is not None else grid[0]
    mu_max = args.mu_max if args.mu_max is not None else grid[1]
    if args.mu_min is not None and args.mu_max is None and args.mu_count is None:
        mu_max = max(mu_min, grid[1])
    count = args.mu_count if args.mu_count is not None else grid[2]
    scale = args.mu_scale or grid[3]
    if args.mu_min is not None and args.mu_max is not None and args.mu_scale is None \
            and min(mu_min, mu_max) <= 0:
        scale = "linear"
    return SweepConfig(system=args.system, methods=tuple(args.method or ()),
                       mu_min=mu_min, mu_max=mu_max, mu_count=count,
                       mu_scale=scale, order=args.order, arith=args.arith,
                       out=args.out, lam=args.lam, tol=args.tol)


def cmd_sweep(args, invocation) -> int:
    _check_order(args.order, 1 if args.system == "vdp" else 0)
    config = _sweep_config(args)
    records = sweep(config)
    write_text(config.out, to_csv(records, SWEEP_COLUMNS, invocation))
    return 0


def cmd_order_scan(args, invocation) -> int:
    _check_order(args.order, 1)
    _check_mu(args.system, args.mu)
    methods = tuple(args.method or ()) or methods_for(args.system)
    bad = [m for m in methods if m not in methods_for(args.system)]
    if bad:
        raise UsageError(f"method(s) {bad} not available for {args.system}")
    if args.arith == "rational" and (args.system == "vdp" or "alpt" in methods):
        raise UsageError("rational arithmetic only applies to lpt/lplde on conservative systems")
    records = order_scan(args.system, args.mu, methods, args.order, lam=args.lam,
                         tol=args.tol, arith=args.arith)
    write_text(args.out, to_csv(records, SCAN_COLUMNS, invocation))
    return 0


def cmd_oracle(args, out) -> int:
    _check_mu(args.system, args.mu)
    mu = args.mu
    if args.system == "vdp":
        if mu <= 0:
            raise UsageError("the Van der Pol oracle needs mu > 0")
        tol = args.tol or default_vdp_tol(mu)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", StiffnessWarning)
            res = vdp_limit_cycle_period(mu, tol)
        out.write(f"period_integration  {fmt(res.value)}\n")
        out.write(f"est_error           {fmt(res.est_error)}\n")
        out.write(f"omega               {fmt(2 * math.pi / res.value)}\n")
        out.write(f"evaluations         {res.evaluations}\n")
        for w in caught:
            out.write(f"warning             {w.message}\n")
        return 0
    spec = OscillatorSpec(SYSTEMS[args.system], mu)
    quad = exact_frequency_quadrature(spec, rtol=args.tol or 1e-12)
    out.write(f"omega_quadrature    {fmt(quad.value)}\n")
    out.write(f"est_error           {fmt(quad.est_error)}\n")
    if args.system == "duffing":
        other, name = duffing_exact_elliptic(mu), "omega_elliptic"
    else:
        other, name = frequency_by_integration(spec, 1e-12), "omega_integration"
    out.write(f"{name:<19} {fmt(other.value)}\n")
    out.write(f"est_error           {fmt(other.est_error)}\n")
    out.write(f"discrepancy         {fmt(abs(quad.value - other.value))}\n")
    return 0


def main(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    invocation = "perturb-osc " + " ".join(shlex.quote(a) for a in argv)
    try:
        if args.command == "freq":
            return cmd_freq(args, out)
        if args.command == "sweep":
            return cmd_sweep(args, invocation)
        if args.command == "order-scan":
            return cmd_order_scan(args, invocation)
        return cmd_oracle(args, out)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"perturb-osc: error: {exc}\n")
        return EXIT_USAGE
    except (OracleError, NoStationaryPoint, ArithmeticError) as exc:
        sys.stderr.write(f"perturb-osc: numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
