"""Command-line entry point.

Exit status is 0 on success, 2 when a solver reports non-convergence and 1
on any error (bad configuration, failed assumption, I/O).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import build_problem, load_config
from .exceptions import ContactMFGError
from .expr import ExpressionError
from .grid import GridMeasure, read_csv, write_csv
from .mather import extract_kset
from .mfg import continuity_residual, hj_residual, iterate_equilibrium
from .model import check_assumptions, solve_a_m
from .svg import write_plot
from .weak_kam import critical_value, solve_u_minus, solve_u_plus

EXIT_OK, EXIT_ERROR, EXIT_NONCONVERGED = 0, 1, 2

SUBCOMMANDS = ("check", "solve-hj", "critical-value", "mather", "equilibrium", "verify")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(_dump(obj) + "\n")


def _measure(args, prob):
    if args.measure:
        m = read_csv(args.measure, kind="measure")
        if m.grid.n != prob.grid.n:
            raise ContactMFGError(f"{args.measure}: measure has {m.grid.n} nodes, grid has {prob.grid.n}")
        return m
    return GridMeasure.uniform(prob.grid)


def _cmd_check(args, prob, out):
    rep = check_assumptions(prob.model, prob.coupling, n_samples=args.samples, grid=prob.grid, seed=args.seed)
    print(_dump(rep.to_dict()))
    return EXIT_OK if rep.ok else EXIT_ERROR


def _cmd_solve_hj(args, prob, out):
    m = _measure(args, prob)
    sol = solve_u_minus(prob.model, prob.coupling, m, cfg=prob.semigroup)
    write_csv(os.path.join(out, "u_minus.csv"), sol.u_minus)
    res = {
        "converged": sol.converged,
        "steps": sol.steps,
        "error_bound": sol.error_bound,
        "discrete_residual": sol.residual,
        "hj_residual": hj_residual(sol.u_minus, prob.model, prob.coupling, m),
    }
    status = EXIT_OK if sol.converged else EXIT_NONCONVERGED
    if sol.converged:
        fwd = solve_u_plus(sol, prob.model, prob.coupling, m, cfg=prob.semigroup)
        write_csv(os.path.join(out, "u_plus.csv"), fwd.u_plus)
        res["u_plus"] = {"converged": fwd.converged, "steps": fwd.steps, "increment": fwd.increment}
        if not fwd.converged:
            status = EXIT_NONCONVERGED
    _write_json(os.path.join(out, "residuals.json"), res)
    print(_dump(res))
    return status


def _cmd_critical_value(args, prob, out):
    m = _measure(args, prob)
    level = solve_a_m(prob.model, prob.coupling, m) if args.level is None else args.level
    cv = critical_value(prob.model, prob.coupling, m, level, horizon=args.horizon)
    res = {"level": level, "critical_value": cv.value, "long_time_estimate": cv.long_time, "horizon": cv.horizon}
    print(_dump(res))
    return EXIT_OK


def _cmd_mather(args, prob, out):
    m = _measure(args, prob)
    sol = solve_u_minus(prob.model, prob.coupling, m, cfg=prob.semigroup)
    eq = prob.equilibrium
    ks = extract_kset(sol.u_minus, prob.model, prob.coupling, m, eq.tol_h, eq.tol_g)
    ks.to_json(os.path.join(out, "kset.json"))
    print(_dump(ks.to_dict()))
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def _cmd_equilibrium(args, prob, out):
    m0 = _measure(args, prob)
    res = iterate_equilibrium(m0, prob.model, prob.coupling, prob.equilibrium)
    write_csv(os.path.join(out, "u.csv"), res.u)
    write_csv(os.path.join(out, "m.csv"), res.m)
    res.to_json(os.path.join(out, "report.json"))
    if args.emit_svg or prob.config.emit_svg:
        nodes = prob.grid.nodes
        write_plot(os.path.join(out, "u.svg"), nodes, res.u.values, title="u")
        write_plot(os.path.join(out, "m.svg"), nodes, res.m.weights, title="m", stems=True)
    summary = {k: v for k, v in res.report().items() if k != "trace"}
    print(_dump(summary))
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _cmd_verify(args, prob, out):
    u = read_csv(args.u or os.path.join(out, "u.csv"), kind="function")
    m = read_csv(args.m or os.path.join(out, "m.csv"), kind="measure")
    if u.grid.n != m.grid.n:
        raise ContactMFGError("u and m live on different grids")
    eq = prob.equilibrium
    ks = extract_kset(u, prob.model, prob.coupling, m, eq.tol_h, eq.tol_g)
    leak = max(0.0, 1.0 - float(m.weights[ks.indices].sum()))
    res = {
        "hj_residual": hj_residual(u, prob.model, prob.coupling, m),
        "continuity_residual": continuity_residual(u, m, prob.model, prob.coupling, eq.modes),
        "support_leak": leak,
        "kset": [int(i) for i in ks.indices],
    }
    print(_dump(res))
    return EXIT_OK


_HANDLERS = {
    "check": _cmd_check,
    "solve-hj": _cmd_solve_hj,
    "critical-value": _cmd_critical_value,
    "mather": _cmd_mather,
    "equilibrium": _cmd_equilibrium,
    "verify": _cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--emit-svg", action="store_true", help="also write SVG line plots")
    common.add_argument("--seed", type=int, help="seed for sampled checks (overrides seed)")
    common.add_argument("--grid-n", type=int, help="override the grid size")
    common.add_argument("--measure", help="CSV measure to use instead of the uniform one")

    parser = argparse.ArgumentParser(prog="contact-mfg", description="Weak KAM solvers for contact mean field games.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("check", parents=[common], help="report the structural assumptions")
    p.add_argument("--samples", type=int, default=200)
    sub.add_parser("solve-hj", parents=[common], help="compute u_minus and u_plus")
    p = sub.add_parser("critical-value", parents=[common], help="critical value at a frozen level")
    p.add_argument("--level", type=float, help="level a (default: the admissible level)")
    p.add_argument("--horizon", type=float, default=40.0)
    sub.add_parser("mather", parents=[common], help="extract the K-set")
    sub.add_parser("equilibrium", parents=[common], help="iterate to an equilibrium")
    p = sub.add_parser("verify", parents=[common], help="recompute residuals of stored u.csv / m.csv")
    p.add_argument("--u", help="u CSV (default <out>/u.csv)")
    p.add_argument("--m", help="m CSV (default <out>/m.csv)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ContactMFGError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.model_copy(update={"seed": args.seed})
        args.seed = cfg.seed
        prob = build_problem(cfg, args.grid_n)
        out = args.out or cfg.output_dir
        if args.command != "verify" or args.out:
            os.makedirs(out, exist_ok=True)
        return _HANDLERS[args.command](args, prob, out)
    except (ContactMFGError, ExpressionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
