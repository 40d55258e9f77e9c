"""``fracvar`` command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
Errors are also written to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import checks
from .errors import FracvarError
from .fracops import FracOrder, Kind, apply_axis, gl_weights, integral_weights, make_op
from .grid import Field, interior_projection
from .io import read_field, read_problem_spec, write_field, write_json
from .noether import Generator, constant_generator, noether_sum, power_generator
from .solver import assemble_matvec, solve
from .variational import el_residual, gradient_check, interior_max

log = logging.getLogger("fracvar")


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x: float) -> str:
    return repr(float(x) + 0.0)


def cmd_weights(args) -> int:
    alpha, count = args.alpha, args.count
    if not 0 < alpha <= 1:
        raise UsageError(f"alpha must lie in (0, 1], got {alpha}")
    if count < 1:
        raise UsageError("count must be at least 1")
    w = integral_weights(alpha, count) if args.integral else gl_weights(alpha, count)
    partial = np.cumsum(w)
    if args.format == "json":
        text = json.dumps({
            "alpha": alpha, "count": count, "kind": "integral" if args.integral else "derivative",
            "k": list(range(count)), "w": [float(v) + 0.0 for v in w],
            "partial_sum": [float(v) + 0.0 for v in partial],
        }, indent=1) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# alpha={alpha} count={count} kind={'integral' if args.integral else 'derivative'}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "w_k", "partial_sum"])
        for k in range(count):
            writer.writerow([k, _fmt(w[k]), _fmt(partial[k])])
        text = buf.getvalue()
    sys.stdout.write(text)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"weights.{args.format}").write_text(text)
    return 0


def cmd_fracderiv(args) -> int:
    field = read_field(args.field)
    op = make_op(Kind(args.kind), args.alpha, args.axis, field.grid)
    if not 0 <= args.component < field.components:
        raise UsageError(f"component {args.component} out of range")
    result = apply_axis(op, field, args.component)
    out = _outdir(args)
    write_field(out / "fracderiv.json", result)
    if args.format == "csv":
        _write_field_csv(out / "fracderiv.csv", result)
    print(f"fracderiv {args.kind} alpha={args.alpha} axis={args.axis}: max|.|={np.max(np.abs(result.data)):.6g}")
    return 0


def _write_field_csv(path: Path, field: Field) -> None:
    grid = field.grid
    buf = io.StringIO()
    buf.write(f"# lower={list(grid.lower)} upper={list(grid.upper)} nodes={list(grid.nodes)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i}" for i in range(grid.dims)] + [f"u{j}" for j in range(field.components)])
    mesh = [m.reshape(-1) for m in grid.mesh()]
    vals = field.data.reshape(field.components, -1)
    for n in range(grid.size):
        writer.writerow([_fmt(m[n]) for m in mesh] + [_fmt(v[n]) for v in vals])
    path.write_text(buf.getvalue())


def _outdir(args) -> Path:
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(args) -> int:
    if args.suite not in checks.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {list(checks.SUITES)}")
    cases = checks.run_suite(args.suite, seed=args.seed)
    passed = all(c.passed for c in cases)
    report = {"suite": args.suite, "seed": args.seed, "passed": passed,
              "cases": [c.to_dict() for c in cases]}
    write_json(_outdir(args) / f"verify_{args.suite}.json", report)
    for c in cases:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: defect={c.defect:.3e} tol={c.tolerance:.1e}")
    return 0 if passed else 1


def _load(args):
    try:
        return read_problem_spec(args.spec)
    except (KeyError, ValueError, OSError) as exc:
        raise UsageError(f"bad problem spec: {exc}") from exc


def cmd_solve(args) -> int:
    spec = _load(args)
    t0 = time.perf_counter()
    result = solve(spec.problem, spec.tol, spec.max_iter, spec.method)
    elapsed = time.perf_counter() - t0
    out = _outdir(args)
    write_field(out / "solution.json", result.u)
    report = result.report(timings=args.timings)
    report["kind"] = spec.problem.kind
    report["tol"] = spec.tol
    write_json(out / "solve_report.json", report)
    print(f"solve {spec.problem.kind}: method={result.method} iterations={result.iterations} "
          f"linear_residual={result.linear_residual:.3e} el_residual={result.residual_norm:.3e} "
          f"cond={result.condition_estimate:.3e} time={elapsed:.2f}s")
    if not result.converged:
        raise NumericalFailure("linear solve did not reach the requested tolerance")
    return 0


def cmd_residual(args) -> int:
    spec = _load(args)
    u = _read_solution(args, spec)
    res = el_residual(spec.problem.density(), spec.problem.order, u)
    rhs = assemble_matvec(spec.problem).rhs
    c = 10.0 * max(1.0, float(np.sqrt(np.sum(rhs * rhs))))
    bound = c * spec.tol
    out = _outdir(args)
    write_field(out / "residual.json", res.field)
    write_json(out / "residual_report.json", {
        "interior_norm": res.interior_norm, "tol": spec.tol, "C": c, "bound": bound,
        "passed": res.interior_norm <= bound,
    })
    print(f"residual: interior_norm={res.interior_norm:.3e} bound={bound:.3e}")
    if res.interior_norm > bound:
        raise NumericalFailure("residual exceeds C * tol")
    return 0


def _read_solution(args, spec) -> Field:
    u = read_field(args.field)
    if u.grid != spec.problem.grid:
        raise UsageError("field grid does not match the problem spec")
    return u


def cmd_gradcheck(args) -> int:
    spec = _load(args)
    u = _read_solution(args, spec)
    rng = np.random.default_rng(args.seed)
    grid = u.grid
    h = interior_projection(Field(grid, rng.standard_normal((u.components, *grid.shape))),
                            grid.boundary_mask())
    rep = gradient_check(spec.problem.density(), spec.problem.order, u, h, args.eps)
    doc = rep.to_dict()
    doc["seed"] = args.seed
    doc["eps"] = args.eps
    write_json(_outdir(args) / "gradcheck_report.json", doc)
    print(f"gradcheck: quotient={rep.quotient:.12e} pairing={rep.pairing:.12e} "
          f"defect={rep.defect:.3e} tol={rep.tolerance:.3e}")
    if not rep.passed:
        raise NumericalFailure("gradient check failed")
    return 0


def _generator(ref: str, grid, order, m: int) -> Generator:
    if ref == "paper-example":
        return power_generator(grid, order)
    if ref == "constant":
        return constant_generator(grid, m)
    if ref.startswith("file:"):
        f = read_field(ref[5:])
        if f.grid != grid:
            raise UsageError("generator grid does not match the problem grid")
        return Generator(f, ref)
    raise UsageError(f"unknown generator {ref!r}")


def cmd_noether(args) -> int:
    spec = _load(args)
    u = _read_solution(args, spec)
    problem = spec.problem
    density = problem.density()
    xi = _generator(args.generator, u.grid, problem.order, density.m)
    rep = noether_sum(density, problem.order, u, xi)
    summary = rep.summary()
    delta_solve = el_residual(density, problem.order, u).interior_norm
    xi_max = float(np.max(np.abs(xi.xi.data)))
    corollary = summary["invariance_norm"] + xi_max * delta_solve * density.m
    bound = args.bound if args.bound is not None else corollary
    # the corollary is an upper bound up to round-off in the three fields
    passed = rep.conservation_norm <= bound * (1 + 1e-12) + 1e-12 * rep.scale
    doc = dict(summary, generator=xi.label, delta_solve=delta_solve, xi_max=xi_max,
               corollary_bound=corollary, bound=bound, passed=passed)
    out = _outdir(args)
    write_json(out / "noether_report.json", doc)
    write_field(out / "invariance_residual.json", rep.invariance_residual)
    write_field(out / "noether_sum.json", rep.noether_sum)
    write_field(out / "el_pairing.json", rep.el_pairing)
    print(f"noether {xi.label}: conservation_norm={rep.conservation_norm:.3e} bound={bound:.3e} "
          f"identity_defect={rep.identity_defect:.3e}")
    if not passed:
        raise NumericalFailure("conservation norm exceeds bound")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output-dir", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="fracvar", description="Fractional variational calculus toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("weights", parents=[common], help="dump operator weight table")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--count", type=int, default=8)
    s.add_argument("--integral", action="store_true", help="integral kernel weights")
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("fracderiv", parents=[common], help="apply an operator to a field file")
    s.add_argument("--field", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.LEFT_DERIVATIVE.value)
    s.add_argument("--axis", type=int, default=0)
    s.add_argument("--component", type=int, default=0)
    s.set_defaults(func=cmd_fracderiv)

    s = sub.add_parser("verify", parents=[common], help="run a property battery")
    s.add_argument("--suite", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", parents=[common], help="solve a problem spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--timings", action="store_true", help="record wall time in the report file")
    s.set_defaults(func=cmd_solve)

    for name, func in (("residual", cmd_residual), ("gradcheck", cmd_gradcheck), ("noether", cmd_noether)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--spec", required=True)
        s.add_argument("--field", required=True, help="solution field file")
        s.set_defaults(func=func)
        if name == "gradcheck":
            s.add_argument("--eps", type=float, default=1e-4)
        if name == "noether":
            s.add_argument("--generator", default="paper-example")
            s.add_argument("--bound", type=float, default=None)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        _error("usage", str(exc))
        return 2
    except NumericalFailure as exc:
        _error("numerical", str(exc))
        return 1
    except FracvarError as exc:
        kind = "usage" if isinstance(exc, ValueError) else "numerical"
        _error(kind, str(exc))
        return 2 if kind == "usage" else 1
    except (OSError, json.JSONDecodeError) as exc:
        _error("usage", str(exc))
        return 2


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
