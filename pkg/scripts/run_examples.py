"""Run every method on the benchmark families at desk scale.

Writes one long-format trace CSV per instance (``method,iter,relres``) and
prints a summary table. Sizes default to the ones used by the acceptance
suite; ``--quick`` shrinks them for a smoke run.

    python3 scripts/run_examples.py --out runs/
    python3 scripts/run_examples.py --quick --only heat1 synthetic
"""

import argparse
import csv
import time
from pathlib import Path

from gensylv.problem import estimate_spectral_radius, transform
from gensylv.problems import (
    gen_bilinear_tridiag,
    gen_carleman_rc,
    gen_heat1,
    gen_helmholtz_shifted,
    gen_lowrank_lyap,
    gen_synthetic_rand,
)
from gensylv.solvers import SolverConfig, solve

METHODS = ("FP", "AA", "AAA", "PAAA", "PRECONDITIONED")

# name -> (generator call at full size, at quick size, delayed AA start)
INSTANCES = {
    "heat1": (lambda: gen_heat1(20), lambda: gen_heat1(10), 5),
    "synthetic": (lambda: gen_synthetic_rand(400), lambda: gen_synthetic_rand(100), 10),
    "bilinear": (lambda: gen_bilinear_tridiag(1000, gamma=1 / 4),
                 lambda: gen_bilinear_tridiag(200, gamma=1 / 4), 5),
    "carleman": (lambda: gen_carleman_rc(30), lambda: gen_carleman_rc(12), 5),
    "lowrank": (lambda: gen_lowrank_lyap(400), lambda: gen_lowrank_lyap(100), 5),
    "helmholtz": (lambda: gen_helmholtz_shifted(400), lambda: gen_helmholtz_shifted(100), 5),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs"))
    ap.add_argument("--only", nargs="*", choices=sorted(INSTANCES))
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--max-iter", type=int, default=200)
    ap.add_argument("--epsilon", type=float, default=1e-9)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    print(f"{'instance':<10} {'n':>5} {'rho':>7} {'method':<15} {'status':<14}"
          f"{'iters':>6} {'solves':>7} {'exact':>10} {'time[s]':>8}")
    for name in args.only or INSTANCES:
        full, quick, aa_start = INSTANCES[name]
        p = (quick if args.quick else full)()
        t = transform(p)
        rho = estimate_spectral_radius(t).value
        rows = []
        for method in METHODS:
            cfg = SolverConfig(method=method, max_iter=args.max_iter,
                               epsilon=args.epsilon, aa_start=aa_start)
            t0 = time.perf_counter()
            out = solve(p, cfg, transformed=t)
            wall = time.perf_counter() - t0
            rows += [(method, r.iteration, repr(r.relres)) for r in out.trace]
            print(f"{name:<10} {p.n:>5} {rho:>7.4f} {method:<15} {out.status.value:<14}"
                  f"{out.iterations:>6} {out.kernel_solves:>7} {out.exact_relres:>10.2e} {wall:>8.2f}")
        with open(args.out / f"{name}_trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "iter", "relres"])
            writer.writerows(rows)


if __name__ == "__main__":
    main()
