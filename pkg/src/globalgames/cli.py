"""Command-line entry point: ``ggames <subcommand> ...``.

Exit codes: 0 success, 2 bad input (one-line JSON error on stderr),
3 numerical non-convergence (the partial trace is still written),
1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, _io
from ._parallel import ENV_WORKERS, default_workers
from .benchmark import solve_benchmark, verify_benchmark_numerically
from .config import build_experiment, parse_range, read_config_file, to_mapping
from .dist import ErrorDistribution
from .errors import ConvergenceError, DomainError, GameError, NumericalError

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3


def _add_common(p, config=True):
    if config:
        p.add_argument("--config", help="JSON or TOML config file")
    p.add_argument("--format", choices=("json", "csv"), help="output format (default: from --out suffix, else json)")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ggames", description="Equilibria of coordination games with noisy signals.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"parallel worker processes (default: ${ENV_WORKERS} or the CPU count)",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("benchmark", help="fundamental-signal benchmark cutoffs")
    b.add_argument("--c", type=float)
    b.add_argument("--alpha-x", dest="alpha_x", type=float)
    b.add_argument("--verify", action="store_true", help="also solve by nested bisection")
    _add_common(b)

    ns = sub.add_parser("netsignal", help="net-size signal model").add_subparsers(dest="action", required=True)
    fp = ns.add_parser("fixed-points", help="solutions of the attack-mass equation")
    fp.add_argument("--theta", type=float)
    fp.add_argument("--z-star", dest="z_star", type=float)
    fp.add_argument("--alpha-z", dest="alpha_z", type=float)
    _add_common(fp)
    bf = ns.add_parser("bifurcation", help="fixed points over a theta sweep")
    bf.add_argument("--theta-range", dest="theta_range", help="start:stop:count")
    bf.add_argument("--z-star", dest="z_star", type=float)
    bf.add_argument("--alpha-z", dest="alpha_z", type=float)
    _add_common(bf)
    co = ns.add_parser("cutoffs", help="equilibrium signal cutoffs")
    co.add_argument("--c", type=float)
    co.add_argument("--alpha-z", dest="alpha_z", type=float)
    co.add_argument("--switch", dest="branch_switch", type=float, help="branch switch inside the multiplicity region, in [0, 1]")
    _add_common(co)

    ts = sub.add_parser("twosignal", help="separate fundamental and action signals").add_subparsers(dest="action", required=True)
    tc = ts.add_parser("check", help="sufficient-condition margins")
    _add_common(tc)
    ti = ts.add_parser("iterate", help="best-response iteration from a bounded step")
    ti.add_argument("--t", type=float)
    ti.add_argument("--max-iter", dest="max_iter", type=int)
    ti.add_argument("--sup-tol", dest="sup_tol", type=float)
    _add_common(ti)
    st = ts.add_parser("step", help="check a step equilibrium under uniform action noise")
    st.add_argument("--t", type=float)
    st.add_argument("--sigma", type=float)
    _add_common(st)

    os_ = sub.add_parser("onesignal", help="net-size signal with a general error law").add_subparsers(dest="action", required=True)
    oc = os_.add_parser("check", help="sufficient-condition margins")
    _add_common(oc)
    oi = os_.add_parser("iterate", help="cutoff / best-response iteration")
    oi.add_argument("--t", type=float)
    oi.add_argument("--max-iter", dest="max_iter", type=int)
    oi.add_argument("--sup-tol", dest="sup_tol", type=float)
    _add_common(oi)

    sm = sub.add_parser("simulate", help="agent-based steady state")
    sm.add_argument("--model", choices=("netsignal", "onesignal", "twosignal"))
    sm.add_argument("--seed", type=int)
    sm.add_argument("--n", dest="n_agents", type=int)
    sm.add_argument("--theta", type=float)
    sm.add_argument("--cutoff", type=float)
    sm.add_argument("--init", type=float)
    sm.add_argument("--damping", type=float)
    sm.add_argument("--max-rounds", dest="max_rounds", type=int)
    _add_common(sm)
    return ap


_NOT_PARAMS = {"command", "action", "config", "workers", "verify"}


def _experiment(args, selector):
    file_data = read_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_PARAMS}
    if args.workers is not None:
        overrides["workers"] = args.workers
    return build_experiment(selector, file_data, overrides)


def _format(exp) -> str:
    if exp.format:
        return exp.format
    if exp.out and exp.out.lower().endswith(".csv"):
        return "csv"
    return "json"


def _emit(exp, payload: dict, header=None, rows=None):
    if _format(exp) == "csv" and header is not None:
        _io.write_text(_io.csv_text(header, rows), exp.out)
    else:
        _io.write_text(_io.dumps(payload), exp.out)


def _curve_rows(attack):
    return attack.rows()


# --- handlers ---------------------------------------------------------------


def cmd_benchmark(args):
    exp = _experiment(args, "benchmark")
    p = exp.params
    sol = solve_benchmark(p.c, p.alpha_x)
    payload = sol.to_dict()
    payload["residuals"] = list(sol.residuals())
    if args.verify:
        num = verify_benchmark_numerically(p.c, p.alpha_x)
        payload["numerical"] = num.to_dict()
    _emit(exp, payload, ("x_star", "theta_star", "c", "alpha_x"), [(sol.x_star, sol.theta_star, sol.c, sol.alpha_x)])
    return EXIT_OK


def cmd_netsignal(args):
    from . import netsignal as ns

    exp = _experiment(args, "netsignal")
    p = exp.params
    if args.action == "fixed-points":
        fp = ns.attack_fixed_points(p.theta, p.z_star, p.alpha_z, grid_bits=p.grid_bits)
        s = p.alpha_z**0.5
        rows = [(a, st, ns.map_slope(a, p.z_star + p.theta, s)) for a, st in zip(fp.solutions, fp.stability)]
        payload = fp.to_dict()
        payload["residuals"] = fp.residuals().tolist()
        _emit(exp, payload, ("A", "stability", "slope"), rows)
    elif args.action == "bifurcation":
        thetas = parse_range(p.theta_range)
        rows = ns.bifurcation(p.z_star, p.alpha_z, thetas, workers=exp.workers)
        region = ns.multiplicity_region(p.z_star, p.alpha_z)
        payload = {
            "z_star": p.z_star,
            "alpha_z": p.alpha_z,
            "region": region.to_dict(),
            "rows": [list(r) for r in rows],
        }
        _emit(exp, payload, ("theta", "A", "stability"), rows)
    else:
        search = ns.find_equilibrium_cutoffs(p.c, p.alpha_z, ns.Branch(p.branch_switch), workers=exp.workers)
        rows = [
            (
                cut.z_star,
                cut.kind,
                cut.p_below,
                cut.p_above,
                None if cut.plateau is None else cut.plateau[0],
                None if cut.plateau is None else cut.plateau[1],
            )
            for cut in search.cutoffs
        ]
        _emit(exp, search.to_dict(), ("z_star", "kind", "p_below", "p_above", "plateau_lo", "plateau_hi"), rows)
    return EXIT_OK


def _write_report(exp, report):
    rows = _curve_rows(report.attack)
    _emit(exp, report.to_dict(), ("theta", "A"), rows)


def cmd_twosignal(args):
    from . import twosignal as ts
    from .core import GameParams

    exp = _experiment(args, "twosignal")
    p = exp.params
    if args.action == "step":
        attack = ts.build_step_equilibrium(p.t, p.sigma, half_width=p.grid.half_width_sd * max(p.dist_x.sd, p.sigma), n=p.grid.n_theta)
        game = GameParams(p.c, dist_x=p.dist_x, dist_y=ErrorDistribution.uniform(p.sigma))
        rep = ts.verify_consistency(attack, game, p.consistency_tol, p.grid)
        payload = {"t": p.t, "sigma": p.sigma, **rep.to_dict()}
        rows = list(zip(rep.theta.tolist(), rep.attack.tolist(), rep.induced.tolist(), rep.residuals.tolist()))
        _emit(exp, payload, ("theta", "A", "induced", "residual"), rows)
        return EXIT_OK
    params = ts.Prop4Params(p.delta, p.gamma, p.xi, p.c, p.dist_x, p.dist_y)
    if args.action == "check":
        chk = ts.check_prop4_conditions(params, p.eta_max)
        _emit(exp, chk.to_dict(), tuple(chk.to_dict()), [tuple(chk.to_dict().values())])
        return EXIT_OK
    report = ts.iterate_to_equilibrium(p.t, params, p.max_iter, p.sup_tol, p.grid, p.eta_max)
    _write_report(exp, report)
    return EXIT_OK


def cmd_onesignal(args):
    from . import onesignal as os1

    exp = _experiment(args, "onesignal")
    p = exp.params
    params = os1.Prop5Params(p.delta, p.gamma, p.c, p.dist_rho)
    if args.action == "check":
        chk = os1.check_prop5_conditions(params, p.xi_max)
        _emit(exp, chk.to_dict(), tuple(chk.to_dict()), [tuple(chk.to_dict().values())])
        return EXIT_OK
    report = os1.iterate_to_equilibrium_1s(p.t, params, p.max_iter, p.sup_tol, p.grid, p.xi_max)
    _write_report(exp, report)
    return EXIT_OK


def cmd_simulate(args):
    from .simlab import run_steady_state

    exp = _experiment(args, "simulate")
    trace = run_steady_state(exp.params)
    payload = {"config": to_mapping(exp.params), **trace.to_dict()}
    _emit(exp, payload, ("round", "A_hat"), trace.rows())
    return EXIT_OK if trace.converged else EXIT_NUMERIC


HANDLERS = {
    "benchmark": cmd_benchmark,
    "netsignal": cmd_netsignal,
    "twosignal": cmd_twosignal,
    "onesignal": cmd_onesignal,
    "simulate": cmd_simulate,
}


def _error_line(exc, code) -> str:
    info = {"error": type(exc).__name__, "message": str(exc), "exit": code}
    key = getattr(exc, "key", None)
    if key is not None:
        info["key"] = key
    return json.dumps(info)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers is None and os.environ.get(ENV_WORKERS):
        args.workers = default_workers()
    try:
        return HANDLERS[args.command](args)
    except DomainError as exc:
        print(_error_line(exc, EXIT_DOMAIN), file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        trace = exc.trace
        out = getattr(args, "out", None)
        if hasattr(trace, "to_dict") and hasattr(trace, "attack"):
            try:
                exp = _experiment(args, args.command)
                _write_report(exp, trace)
            except GameError:
                pass
        elif out:
            _io.write_text(_io.dumps({"partial_trace": trace}), out)
        print(_error_line(exc, EXIT_NUMERIC), file=sys.stderr)
        return EXIT_NUMERIC
    except NumericalError as exc:
        print(_error_line(exc, EXIT_NUMERIC), file=sys.stderr)
        return EXIT_NUMERIC
    except GameError as exc:
        print(_error_line(exc, EXIT_FAIL), file=sys.stderr)
        return EXIT_FAIL


def main(argv=None):
    sys.exit(run(argv))
