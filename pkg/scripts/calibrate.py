"""Fit the HEAT1 scale factor to a target spectral radius.

Bisects ``coupling_scale`` (on a log scale) until the power-iteration
estimate at the requested grid size matches the target, then prints the
value to freeze as ``HEAT1_COUPLING_SCALE``.

    python3 scripts/calibrate.py --n0 30 --target 0.93
"""

import argparse
import math

from gensylv.problem import estimate_spectral_radius, transform
from gensylv.problems import gen_heat1


def radius(scale, n0, tol):
    t = transform(gen_heat1(n0, coupling_scale=scale))
    return estimate_spectral_radius(t, tol=tol).value


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n0", type=int, default=30)
    ap.add_argument("--target", type=float, default=0.93)
    ap.add_argument("--lo", type=float, default=0.1)
    ap.add_argument("--hi", type=float, default=10.0)
    ap.add_argument("--rtol", type=float, default=1e-4)
    args = ap.parse_args()

    # the radius decreases as the scale grows
    lo, hi = math.log(args.lo), math.log(args.hi)
    while hi - lo > args.rtol:
        mid = 0.5 * (lo + hi)
        rho = radius(math.exp(mid), args.n0, tol=1e-7)
        print(f"scale={math.exp(mid):.6f} rho={rho:.6f}")
        if rho > args.target:
            lo = mid
        else:
            hi = mid
    scale = math.exp(0.5 * (lo + hi))
    print(f"HEAT1_COUPLING_SCALE = {scale:.4f}")
    for n0 in sorted({20, args.n0}):
        print(f"n0={n0}: rho={radius(round(scale, 4), n0, tol=1e-7):.4f}")


if __name__ == "__main__":
    main()
