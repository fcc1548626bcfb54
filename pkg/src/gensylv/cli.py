"""Command-line benchmark harness.

Subcommands::

    gensylv solve         run one method, write a per-iteration trace and a summary
    gensylv compare       run several methods on the same instance
    gensylv spectral      estimate the spectral radius of the iteration operator
    gensylv oracle-check  compare an iterative solution with the Kronecker solve
    gensylv generate      write a generated problem to a problem file

A problem is either generated (``--family NAME --param key=value ... --seed S``)
or read from a file (``--problem PATH``). Options can also come from a flat
YAML file given with ``--config``; command-line flags override its values.
Output files default to the directory named by ``$GENSYLV_OUTPUT_DIR``
(current directory if unset).

Exit codes
----------
0   converged (``oracle-check``: gap below ``--rtol``)
2   usage error: bad arguments, unreadable or unwritable files, size cap
10  MaxIterations
11  Diverged
12  OperatorError (singular or near-singular operator, Schur failure)
13  oracle mismatch (``oracle-check`` gap above ``--rtol``)
"""

import argparse
import csv
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from gensylv.errors import GenSylvError, SizeCapError
from gensylv.oracle import assemble, iteration_operator, solve_direct
from gensylv.problem import estimate_spectral_radius, transform
from gensylv.problems import FAMILIES, ProblemSpec, load_problem, make_problem, save_problem
from gensylv.solvers import Method, SolverConfig, Status, solve

log = logging.getLogger("gensylv")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MAX_ITERATIONS = 10
EXIT_DIVERGED = 11
EXIT_OPERATOR_ERROR = 12
EXIT_ORACLE_MISMATCH = 13

STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.MAX_ITERATIONS: EXIT_MAX_ITERATIONS,
    Status.DIVERGED: EXIT_DIVERGED,
    Status.OPERATOR_ERROR: EXIT_OPERATOR_ERROR,
}

OUTPUT_DIR_ENV = "GENSYLV_OUTPUT_DIR"

TRACE_HEADER = ["iter", "relres", "step_kind", "elapsed_seconds", "kernel_solves"]
SUMMARY_HEADER = ["method", "status", "iterations", "final_relres", "exact_relres", "wall_seconds"]
COMPARE_TRACE_HEADER = ["method", "iter", "relres"]
COMPARE_SUMMARY_HEADER = [
    "method", "status", "rho_estimate", "iterations", "kernel_solves",
    "final_relres", "exact_relres", "wall_seconds",
]

# SolverConfig fields that may be set from flags or the config file
_SOLVER_KEYS = ("epsilon", "max_iter", "aa_start", "m_max", "beta", "svd_rel_threshold",
                "divergence_factor")

# YAML 1.1 reads "1e-7" as a string, so config values are coerced by key
_FLOAT_KEYS = {"epsilon", "beta", "svd_rel_threshold", "divergence_factor", "rtol", "tol"}
_INT_KEYS = {"max_iter", "aa_start", "m_max", "power_max_iter", "verbose", "seed"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything one CLI invocation needs, after merging file and flags."""

    problem: object = None  # ProblemSpec or path to a problem file
    methods: list = field(default_factory=lambda: [Method.PAAA])
    required: list = None  # compare: methods whose status sets the exit code
    solver: dict = field(default_factory=dict)
    output_dir: str = "."
    trace: str = None
    summary: str = None
    out: str = None
    rtol: float = 1e-7
    oracle: bool = False
    tol: float = 1e-4
    power_max_iter: int = 500
    verbose: int = 0

    def solver_config(self, method):
        return SolverConfig(method=method, **self.solver)

    def path(self, explicit, default_name):
        return Path(explicit) if explicit else Path(self.output_dir) / default_name


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _open_for_write(path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _load_problem(cfg):
    if cfg.problem is None:
        raise UsageError("no problem given: use --family or --problem")
    if isinstance(cfg.problem, ProblemSpec):
        try:
            return make_problem(cfg.problem)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid problem parameters: {exc}") from exc
    try:
        return load_problem(cfg.problem)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read problem file {cfg.problem}: {exc}") from exc


def write_trace(path, outcome):
    with _open_for_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in outcome.trace:
            w.writerow([r.iteration, _fmt(r.relres), r.step_kind.value, f"{r.elapsed:.6f}",
                        r.kernel_solves])


def _summary_row(outcome, wall):
    return [outcome.method.value, outcome.status.value, outcome.iterations,
            _fmt(outcome.final_relres), _fmt(outcome.exact_relres), f"{wall:.6f}"]


def _run(p, cfg, method, transformed=None):
    t0 = time.perf_counter()
    out = solve(p, cfg.solver_config(method), transformed=transformed)
    wall = time.perf_counter() - t0
    if out.message:
        log.warning("%s: %s", method.value, out.message)
    return out, wall


def cmd_solve(cfg):
    p = _load_problem(cfg)
    method = cfg.methods[0]
    out, wall = _run(p, cfg, method)
    write_trace(cfg.path(cfg.trace, "trace.csv"), out)
    with _open_for_write(cfg.path(cfg.summary, "summary.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        w.writerow(_summary_row(out, wall))
    print(f"{method.value}: {out.status.value} after {out.iterations} iterations, "
          f"relres {_fmt(out.final_relres)} (exact {_fmt(out.exact_relres)}), {wall:.2f}s")
    return STATUS_EXIT[out.status]


def cmd_compare(cfg):
    if len(cfg.methods) < 2:
        raise UsageError("compare needs at least two methods")
    p = _load_problem(cfg)
    try:
        t = transform(p)
    except GenSylvError as exc:
        print(f"transform failed: {exc}", file=sys.stderr)
        return EXIT_OPERATOR_ERROR
    try:
        rho = estimate_spectral_radius(t, tol=cfg.tol, max_iter=cfg.power_max_iter).value
    except GenSylvError:
        rho = float("nan")
    required = set(cfg.required or cfg.methods)
    results = []
    for method in cfg.methods:
        out, wall = _run(p, cfg, method, transformed=t)
        results.append((method, out, wall))

    with _open_for_write(cfg.path(cfg.trace, "compare_trace.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(COMPARE_TRACE_HEADER)
        for method, out, _ in results:
            for r in out.trace:
                w.writerow([method.value, r.iteration, _fmt(r.relres)])
    rows = []
    for method, out, wall in results:
        rows.append([method.value, out.status.value, f"{rho:.4f}", out.iterations,
                     out.kernel_solves, _fmt(out.final_relres), _fmt(out.exact_relres),
                     f"{wall:.6f}"])
    with _open_for_write(cfg.path(cfg.summary, "compare_summary.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(COMPARE_SUMMARY_HEADER)
        w.writerows(rows)

    print(f"{'method':<16}{'status':<15}{'rho':>8}{'iters':>7}{'time[s]':>10}")
    for method, out, wall in results:
        print(f"{method.value:<16}{out.status.value:<15}{rho:>8.4f}{out.iterations:>7}{wall:>10.2f}")
    return max(STATUS_EXIT[out.status] for m, out, _ in results if m in required)


def cmd_spectral(cfg):
    p = _load_problem(cfg)
    try:
        t = transform(p)
        est = estimate_spectral_radius(t, tol=cfg.tol, max_iter=cfg.power_max_iter)
    except GenSylvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATOR_ERROR
    print(f"estimate {est.value:.6f}")
    print(f"iterations {est.iterations}")
    print(f"converged {str(est.converged).lower()}")
    if cfg.oracle:
        try:
            op = iteration_operator(t)
        except SizeCapError as exc:
            raise UsageError(str(exc)) from exc
        print(f"oracle_radius {op.spectral_radius:.6f}")
        print(f"oracle_norm {op.norm:.6f}")
    return EXIT_OK


def cmd_oracle_check(cfg):
    p = _load_problem(cfg)
    try:
        sys_ = assemble(p)
    except SizeCapError as exc:
        raise UsageError(str(exc)) from exc
    method = cfg.methods[0]
    out, _ = _run(p, cfg, method)
    if out.x is None:
        print(f"{method.value}: {out.status.value}: {out.message}", file=sys.stderr)
        return EXIT_OPERATOR_ERROR
    try:
        x_ref = solve_direct(sys_)
    except GenSylvError as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return EXIT_OPERATOR_ERROR
    ref_norm = np.linalg.norm(x_ref)
    gap = np.linalg.norm(out.x - x_ref) / ref_norm if ref_norm > 0 else np.linalg.norm(out.x)
    print(f"{method.value}: {out.status.value}, relative gap {gap:.3e} (rtol {cfg.rtol:g})")
    if out.status is not Status.CONVERGED:
        return STATUS_EXIT[out.status]
    return EXIT_OK if gap <= cfg.rtol else EXIT_ORACLE_MISMATCH


def cmd_generate(cfg):
    p = _load_problem(cfg)
    path = cfg.path(cfg.out, "problem.txt")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_problem(p, path)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc
    print(f"wrote {path} (n = {p.n}, m = {p.m})")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "spectral": cmd_spectral,
    "oracle-check": cmd_oracle_check,
    "generate": cmd_generate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    ap = _Parser(prog="gensylv", description="Generalized Sylvester equation solvers.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        # defaults are None so that unset flags do not override the config file
        sp.add_argument("--config", help="flat YAML file with option values")
        g = sp.add_argument_group("problem")
        g.add_argument("--family", choices=FAMILIES)
        g.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="generator parameter (repeatable)")
        g.add_argument("--seed", type=int)
        g.add_argument("--problem", help="problem file written by 'generate'")
        s = sp.add_argument_group("solver")
        if name == "compare":
            s.add_argument("--methods", help="comma-separated methods")
            s.add_argument("--required", help="methods whose status sets the exit code")
        else:
            s.add_argument("--method")
        s.add_argument("--epsilon", type=float)
        s.add_argument("--max-iter", type=int, dest="max_iter")
        s.add_argument("--aa-start", type=int, dest="aa_start")
        s.add_argument("--m-max", type=int, dest="m_max")
        s.add_argument("--beta", type=float)
        s.add_argument("--svd-threshold", type=float, dest="svd_rel_threshold")
        s.add_argument("--divergence-factor", type=float, dest="divergence_factor")
        o = sp.add_argument_group("output")
        o.add_argument("--output-dir", dest="output_dir")
        o.add_argument("--trace")
        o.add_argument("--summary")
        o.add_argument("--out", help="problem file to write (generate)")
        sp.add_argument("--rtol", type=float)
        sp.add_argument("--oracle", action="store_const", const=True)
        sp.add_argument("--tol", type=float, help="power iteration tolerance")
        sp.add_argument("--power-max-iter", type=int, dest="power_max_iter")
        sp.add_argument("-v", "--verbose", action="count")
    return ap


def _parse_params(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        params[key] = yaml.safe_load(value)
    return params


def _methods(value):
    if value is None:
        return None
    items = value if isinstance(value, list) else str(value).split(",")
    try:
        return [Method.parse(m.strip()) for m in items if str(m).strip()]
    except ValueError as exc:
        raise UsageError(f"unknown method in {value!r}") from exc


def _read_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    data = {str(k).replace("-", "_"): v for k, v in data.items()}
    try:
        for key in _FLOAT_KEYS & data.keys():
            data[key] = float(data[key])
        for key in _INT_KEYS & data.keys():
            data[key] = int(data[key])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config {path}: {exc}") from exc
    return data


def run_config_from_args(args):
    """Merge defaults, the ``--config`` file and explicit flags into a :class:`RunConfig`."""
    merged = _read_config(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command")}
    if "param" in flags:
        flags["params"] = {**(merged.get("params") or {}), **_parse_params(flags.pop("param"))}
    merged.update(flags)

    known = {f.name for f in fields(RunConfig)} | set(_SOLVER_KEYS) | {
        "family", "params", "seed", "method"}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise UsageError(f"unknown option(s): {', '.join(unknown)}")

    cfg = RunConfig(output_dir=os.environ.get(OUTPUT_DIR_ENV, "."))
    if merged.get("family") is not None:
        try:
            cfg.problem = ProblemSpec(merged["family"], dict(merged.get("params") or {}),
                                      int(merged.get("seed") or 0))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if merged.get("problem"):
            raise UsageError("give either --family or --problem, not both")
    elif merged.get("problem"):
        cfg.problem = merged["problem"]
    methods = _methods(merged.get("methods")) or _methods(merged.get("method"))
    if methods:
        cfg.methods = methods
    cfg.required = _methods(merged.get("required"))
    cfg.solver = {k: merged[k] for k in _SOLVER_KEYS if merged.get(k) is not None}
    for key in ("output_dir", "trace", "summary", "out", "rtol", "oracle", "tol",
                "power_max_iter", "verbose"):
        if merged.get(key) is not None:
            setattr(cfg, key, merged[key])
    try:
        for m in cfg.methods:
            cfg.solver_config(m)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver options: {exc}") from exc
    return cfg


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = run_config_from_args(args)
        logging.basicConfig(
            level=logging.DEBUG if cfg.verbose > 1 else logging.INFO if cfg.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"gensylv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
