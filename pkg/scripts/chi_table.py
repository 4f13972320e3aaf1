#!/usr/bin/env python3
"""Print the on-shell replacement table for derivative monomials.

For every derivative monomial up to a chosen order, lists chi(S) computed by
the spectral route, the explicit-formula value, and the delta counterterm
added to S applied to the fundamental solution (normalization Qv = c delta
with c = -i).

Usage: python3 scripts/chi_table.py [--k-max 4] [--m2 0] [--metric +---]
"""

import argparse
import sys
from fractions import Fraction
from itertools import combinations_with_replacement

sys.path.insert(0, "src")

from onshell.scalar import GaussianRational
from onshell.chi import (
    ConstCoeffOperator,
    FeynmanConfig,
    chi_explicit,
    chi_projection,
    theta_counterterm,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k-max", type=int, default=4)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--m2", default="0")
    ap.add_argument("--metric", default=None)
    args = ap.parse_args()

    sig = (tuple(1 if ch == "+" else -1 for ch in args.metric)
           if args.metric else (1,) + (-1,) * (args.dim - 1))
    config = FeynmanConfig(args.dim, sig, Fraction(args.m2))
    c = GaussianRational(0, -1)

    print(f"# n = {args.dim}, metric = {sig}, m^2 = {args.m2}, c = -i")
    print(f"# {'S':24} {'chi(S)':58} counterterm")
    mismatches = 0
    for k in range(args.k_max + 1):
        for idx in combinations_with_replacement(range(args.dim), k):
            s_op = ConstCoeffOperator.monomial(config, idx)
            res = chi_projection(s_op, c, config)
            expl = chi_explicit(idx, args.dim, Fraction(args.m2), sig)
            if res.chi.coeffs != expl.coeffs:
                mismatches += 1
            ct = theta_counterterm(s_op, c, config)
            mark = "" if res.chi.coeffs == expl.coeffs else "  << ROUTES DISAGREE"
            print(f"{str(s_op):26} {str(res.chi):58} {ct}{mark}")
    if mismatches:
        print(f"\n{mismatches} disagreements between the two routes", file=sys.stderr)
        return 1
    print("\n# both routes agree on every line")
    return 0


if __name__ == "__main__":
    sys.exit(main())
