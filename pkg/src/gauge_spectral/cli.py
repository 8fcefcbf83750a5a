"""Command-line driver: ``gauge-spectral <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import calculus, cauchy, mapping, regulated, spectral_core, unbounded, verify
from ._domain import Cell, Domain
from .errors import ArgumentError, GaugeSpectralError
from .rng import default_seed

# eigenvalues of the default Thomae demo operator: a few small-denominator
# rationals and one irrational
THOMAE_DEMO_EIGENVALUES = (1 / 2, 1 / 3, 2 / 5, 3 / 7, 5 / 8, 1 / math.sqrt(2))


@dataclass
class CommandPlan:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    output_format: str = "json"
    output_path: str | None = None


# ---------------------------------------------------------------------------
# parsing helpers


def fmt(x) -> str:
    """Shortest round-trip text for a real or complex number."""
    z = complex(x)
    if z.imag == 0:
        return repr(float(z.real))
    return repr(z).strip("()")


def _floats(text: str, count: int | None = None) -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ArgumentError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ArgumentError(f"expected {count} numbers, got {text!r}")
    return vals


def parse_levels(text: str) -> list:
    """``"1..6"`` or ``"2,4,8"``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise ArgumentError(f"bad level range {text!r}") from None
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ArgumentError(f"bad level list {text!r}") from None


def parse_function(spec: str, domain=None) -> regulated.RegulatedFn:
    """Build a regulated function from a short spec string.

    ``heaviside:c``, ``indicator:lo,hi``, ``point:c``, ``thomae[:n]``,
    ``const:c``, ``identity``, ``expr:<expression in x>`` or ``@file.json``.
    """
    kind, _, arg = spec.partition(":")
    if spec.startswith("@"):
        return regulated.load_piecewise(spec[1:])
    if kind == "thomae":
        level = int(arg) if arg else None
        return regulated.thomae(level, domain) if domain is not None else regulated.thomae(level)
    d = domain if domain is not None else (0.0, 1.0)
    if kind == "heaviside":
        return regulated.heaviside(_floats(arg, 1)[0], d)
    if kind == "indicator":
        lo, hi = _floats(arg, 2)
        return regulated.indicator(Cell.closed(lo, hi), d)
    if kind == "point":
        return regulated.indicator(Cell.singleton(_floats(arg, 1)[0]), d)
    if kind == "const":
        return regulated.constant(complex(arg), d)
    if kind == "identity":
        return regulated.identity(d)
    if kind == "expr":
        return regulated.continuous(regulated.compile_expr(arg), d)
    raise ArgumentError(f"unknown function spec {spec!r}")


def _spectral_domain(E, pad: float = 1.0):
    return (float(E.points[0]) - pad, float(E.points[-1]) + pad)


def _complex_pairs(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex)]


def _matrix_csv(M) -> str:
    M = np.asarray(M, dtype=complex)
    real = np.all(M.imag == 0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in M:
        w.writerow([fmt(v.real) if real else fmt(v) for v in row])
    return buf.getvalue()


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, complex, np.floating, np.complexfloating))
                    else v for v in r])
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _run_apply(plan: CommandPlan) -> tuple:
    o = plan.options
    A = spectral_core.load_matrix_csv(o["matrix"])
    E = spectral_core.spectral_measure(A)
    dom = tuple(_floats(o["domain"], 2)) if o.get("domain") else None
    f = parse_function(o["fn"], dom if dom or o["fn"].startswith("thomae") else _spectral_domain(E))
    M = calculus.apply_calculus(f, E, o["eps"])
    if plan.output_format == "json":
        return _dump({"matrix": [_complex_pairs(row) for row in M]}), 0
    return _matrix_csv(M), 0


def _model(spec: str, matrix: str | None, N: int):
    if spec == "finite":
        if not matrix:
            raise ArgumentError("the finite model needs --matrix")
        return spectral_core.spectral_measure(spectral_core.load_matrix_csv(matrix)), "finite", None
    kind, _, arg = spec.partition(":")
    if kind != "continuum":
        raise ArgumentError(f"unknown model {spec!r}; use finite or continuum:a,b")
    a, b = _floats(arg or "0,1", 2)
    return spectral_core.grid_model(a, b, N), "continuum", (a, b)


def _run_spectrum_map(plan: CommandPlan) -> tuple:
    o = plan.options
    E, model, interval = _model(o["model"], o.get("matrix"), o["grid"])
    dom = tuple(_floats(o["domain"], 2)) if o.get("domain") else None
    if dom is None and not o["fn"].startswith("thomae"):
        dom = interval if interval is not None else _spectral_domain(E)
    f = parse_function(o["fn"], dom)
    sp = mapping.spectral_map(f, E, model, samples=o["samples"])
    if plan.output_format == "csv":
        return _rows_csv(["re", "im"], [(float(z.real), float(z.imag)) for z in sp.points]), 0
    data = json.loads(sp.to_json())
    data["closure_note"] = sp.closure_note
    return _dump(data), 0


def _run_thomae_demo(plan: CommandPlan) -> tuple:
    o = plan.options
    levels = parse_levels(o["levels"])
    if not levels or min(levels) < 1:
        raise ArgumentError("levels must be positive")
    if o.get("matrix"):
        E = spectral_core.spectral_measure(spectral_core.load_matrix_csv(o["matrix"]))
    else:
        E = spectral_core.spectral_measure(np.diag(THOMAE_DEMO_EIGENVALUES))
    top = max(levels)
    ops = {n: calculus.apply_calculus(regulated.thomae(n), E) for n in sorted(set(levels))}
    rows = [(n, calculus.operator_norm(ops[n] - ops[top]), 1 / (n + 1)) for n in levels]
    xs = np.linspace(0.01, 0.99, o["samples"])
    samples = {n: regulated.thomae(n).evaluate(xs).real for n in levels}
    if o.get("samples_out"):
        header = ["x"] + [f"t_{n}" for n in levels]
        body = [[float(x)] + [float(samples[n][i]) for n in levels] for i, x in enumerate(xs)]
        with open(o["samples_out"], "w") as fh:
            fh.write(_rows_csv(header, body))
    if plan.output_format == "csv":
        return _rows_csv(["level", "norm_diff_to_finest", "bound"], rows), 0
    return _dump({"table": [{"level": n, "norm_diff_to_finest": d, "bound": b} for n, d, b in rows],
                  "samples": {"x": xs.tolist(),
                              **{f"t_{n}": samples[n].tolist() for n in levels}}}), 0


def _run_mult_norm(plan: CommandPlan) -> tuple:
    o = plan.options
    a, b, N = _floats(o["grid_spec"], 3)
    E = spectral_core.grid_model(a, b, int(N))
    f = parse_function(o["fn"], (a, b) if not o["fn"].startswith("thomae") else None)
    op = calculus.operator_norm(calculus.apply_calculus(f, E), E.dx)
    sup = float(np.max(np.abs(f.evaluate(E.points))))
    if plan.output_format == "csv":
        return _rows_csv(["op_norm", "sup_norm"], [(op, sup)]), 0
    return _dump({"op_norm": op, "sup_norm": sup}), 0


def _unbounded_model(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "geometric":
        return unbounded.geometric_atoms(float(arg or 0.5))
    if kind == "power":
        return unbounded.power_atoms(float(arg or 2.0))
    if kind == "atoms":
        return unbounded.load_atoms_csv(arg)
    if kind == "density":
        rho = regulated.compile_expr(arg)
        return unbounded.DensityModel(lambda x: rho(x).real)
    raise ArgumentError(f"unknown unbounded model {spec!r}")


def _run_domain_test(plan: CommandPlan) -> tuple:
    o = plan.options
    mu = _unbounded_model(o["model"])
    f = regulated.compile_expr(o["fn"])
    v = unbounded.domain_member(f, mu, o["eps"], o.get("n_max"))
    if plan.output_format == "csv":
        radii = v.radii or [math.nan] * len(v.partial_sums)
        return _rows_csv(["radius", "partial_sum"], list(zip(radii, v.partial_sums))), 0
    return _dump({"member": v.member, "value": None if math.isnan(v.value) else v.value,
                  "bound_used": v.bound_used, "radii": list(v.radii),
                  "partial_sums": list(v.partial_sums)}), 0


_DEMOS = {"standard": cauchy.standard_demo, "heaviside": cauchy.heaviside_demo,
          "equilibrium": cauchy.equilibrium_demo}


def _run_cauchy_solve(plan: CommandPlan) -> tuple:
    o = plan.options
    if o.get("config"):
        with open(o["config"]) as fh:
            S, d, levels = cauchy.load_demo_config(json.load(fh))
    else:
        S, d = _DEMOS[o["demo"]]()
        levels = [2, 4, 8, 16]
    if o.get("levels"):
        levels = parse_levels(o["levels"])
    times = (_floats(o["times"]) if o.get("times")
             else np.linspace(0, d.horizon, 11).tolist())
    traj = [(t, cauchy.mild_solution(S, d, t, o["quad_steps"])) for t in times]
    rep = (cauchy.convergence_report(S, d, levels, times, o["quad_steps"])
           if levels else None)
    if o.get("trajectory_out"):
        header = ["t"] + [f"u_{j}" for j in range(S.grid.N)]
        with open(o["trajectory_out"], "w") as fh:
            fh.write(_rows_csv(header, [[t, *map(float, u)] for t, u in traj]))
    if plan.output_format == "csv":
        return (rep.to_csv() if rep else "level,measured,bound,ok\n"), 0
    return _dump({"nodes": S.grid.points.tolist(),
                  "trajectory": [{"t": t, "u": u.tolist()} for t, u in traj],
                  "report": rep.as_dict() if rep else None}), 0


def _run_verify(plan: CommandPlan) -> tuple:
    seed = plan.options["seed"]
    results = verify.run(seed)
    return verify.report(results, seed), 0 if all(r.ok for r in results) else 1


_RUNNERS = {"apply": _run_apply, "spectrum-map": _run_spectrum_map,
            "thomae-demo": _run_thomae_demo, "mult-norm": _run_mult_norm,
            "domain-test": _run_domain_test, "cauchy-solve": _run_cauchy_solve,
            "verify": _run_verify}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gauge-spectral",
                description="Gauge-integral functional calculus for self-adjoint operators.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default depends on the subcommand)")
    common.add_argument("--out", help="write the main output here instead of stdout")
    common.add_argument("--error-json", action="store_true",
                        help="report failures as a JSON object on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("apply", parents=[common], help="f(A) for a symmetric matrix")
    s.add_argument("--matrix", required=True, help="symmetric matrix CSV")
    s.add_argument("--fn", required=True, help="function spec or @piecewise.json")
    s.add_argument("--eps", type=float, default=calculus.DEFAULT_EPS)
    s.add_argument("--domain", help="a,b interval for the function (default: spectrum +- 1)")

    s = sub.add_parser("spectrum-map", parents=[common], help="spectrum of f(A)")
    s.add_argument("--fn", required=True)
    s.add_argument("--model", default="finite", help="finite or continuum:a,b")
    s.add_argument("--matrix", help="matrix CSV for the finite model")
    s.add_argument("--grid", type=int, default=128, help="grid size for the continuum model")
    s.add_argument("--samples", type=int, default=mapping.CONTINUUM_SAMPLES)
    s.add_argument("--domain")

    s = sub.add_parser("thomae-demo", parents=[common], help="Thomae truncation table")
    s.add_argument("--levels", default="1..6")
    s.add_argument("--matrix")
    s.add_argument("--samples", type=int, default=981, help="function sample count")
    s.add_argument("--samples-out", help="CSV path for function samples")

    s = sub.add_parser("mult-norm", parents=[common], help="||M_f|| against sup |f|")
    s.add_argument("--fn", required=True)
    s.add_argument("--grid", dest="grid_spec", default="0,1,128", help="a,b,N")

    s = sub.add_parser("domain-test", parents=[common], help="is f in the domain of f(A)?")
    s.add_argument("--fn", required=True, help="expression in x")
    s.add_argument("--model", required=True,
                   help="geometric:r, power:p, atoms:file.csv or density:<expr>")
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--n-max", type=float)

    s = sub.add_parser("cauchy-solve", parents=[common], help="mild solution and convergence")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--config", help="demo configuration JSON")
    g.add_argument("--demo", choices=sorted(_DEMOS), default="standard")
    s.add_argument("--times", help="comma-separated sample times")
    s.add_argument("--levels", help="approximant levels, e.g. 2,4,8,16 (empty: none)")
    s.add_argument("--quad-steps", type=int, default=200)
    s.add_argument("--trajectory-out", help="CSV path for the trajectory")

    s = sub.add_parser("verify", parents=[common], help="run the invariant battery")
    s.add_argument("--seed", type=int, default=None)
    return p


_DEFAULT_FORMAT = {"apply": "csv", "cauchy-solve": "json", "verify": "text"}


def parse(args) -> CommandPlan:
    ns = build_parser().parse_args(args)
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "format", "out")}
    if ns.command == "verify" and opts.get("seed") is None:
        opts["seed"] = default_seed()
    inputs = {k: opts[k] for k in ("matrix", "config") if opts.get(k)}
    fmt_ = ns.format or _DEFAULT_FORMAT.get(ns.command, "json")
    return CommandPlan(ns.command, inputs, opts, fmt_, ns.out)


def execute(plan: CommandPlan, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text, status = _RUNNERS[plan.subcommand](plan)
    except (GaugeSpectralError, ValueError, OSError, KeyError) as exc:
        if plan.options.get("error_json"):
            stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        else:
            stderr.write(f"gauge-spectral {plan.subcommand}: {type(exc).__name__}: {exc}\n")
        return 1
    if plan.output_path:
        with open(plan.output_path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return status


def main(argv=None) -> int:
    return execute(parse(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
