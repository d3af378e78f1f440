"""Negative-eigenvalue count of the current vortex over (l, g, lambda).

Writes one CSV row per (l, g, lambda) with the Sturm count on a fixed
window and the lowest eigenvalue.  States shallower than the window can
resolve (roughly |E| < 1e-4 for the default extent) are not counted.

    python3 scripts/binding_diagram.py --out binding.csv
"""

import argparse
import csv
import sys

import numpy as np

from fluxtrap import radial
from fluxtrap.fields import exponential_current


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--ells", type=int, nargs="+", default=[-2, -1, 0, 1, 2])
    p.add_argument("--g", type=float, nargs="+", default=[2.0, 2.5, 3.0, 4.0])
    p.add_argument("--lam", type=float, nargs=3, default=[0.05, 50.0, 13], metavar=("START", "STOP", "NUM"))
    p.add_argument("--spin", type=int, default=-1, choices=[-1, 1])
    p.add_argument("--extent", type=float, default=400.0)
    p.add_argument("--n", type=int, default=1500)
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)

    J = exponential_current()
    lams = np.geomspace(args.lam[0], args.lam[1], int(args.lam[2]))
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["ell", "g", "lam", "count", "lowest"])
    for ell in args.ells:
        for g in args.g:
            for lam in lams:
                disc = radial.Discretization.for_scales(core=min(0.02, 0.1 / np.sqrt(lam)), extent=args.extent, n=args.n)
                prob = radial.vortex_problem(J, float(lam), ell, g, args.spin)
                count = radial.count_negative(prob, disc)
                low = radial.lowest_eigenvalue(prob, disc) if count else None
                w.writerow([ell, g, f"{lam:.6g}", count, "" if low is None else f"{low:.10g}"])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
