"""Fit the r^-3 tail of the vortex effective potential.

For each (l, g, spin) the coefficient of r^-3 in V_l - l^2/r^2 is fitted
on [1e3, 1e4] and printed next to the two closed-form candidates
lam*m*(2l - s g)/2 and lam*(m/pi)*(4l - s g)/2 (m the dipole moment).

    python3 scripts/tail_prefactor.py
"""

import argparse

from fluxtrap import radial
from fluxtrap.fields import current_moments, exponential_current


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--ells", type=int, nargs="+", default=[-2, -1, 0, 1, 2])
    p.add_argument("--g", type=float, nargs="+", default=[2.0, 3.0])
    args = p.parse_args(argv)

    J = exponential_current()
    print(f"m = {current_moments(J).m:.10g}")
    print(f"{'l':>3} {'g':>5} {'s':>3} {'power':>8} {'fitted':>14} {'lam m (2l-sg)/2':>16} {'lam m/pi (4l-sg)/2':>19}")
    for ell in args.ells:
        for g in args.g:
            for spin in (-1, 1):
                fit = radial.fit_potential_tail(J, args.lam, ell, g, spin)
                a, b = fit.candidates.values()
                print(f"{ell:>3} {g:>5} {spin:>3} {fit.power:>8.4f} {fit.coefficient:>14.6f} {a:>16.6f} {b:>19.6f}")


if __name__ == "__main__":
    main()
