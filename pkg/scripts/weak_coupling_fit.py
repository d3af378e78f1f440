"""Shallow l = 0 ground states of the vortex and the ln|E| versus lambda^-2 fit.

Prints ln|E| for each lambda, then the slope of the linear fit and of the
three-term fit ln|E| = a/lam^2 + b/lam + c next to the predicted slope.

    python3 scripts/weak_coupling_fit.py --g 4
"""

import argparse

import numpy as np

from fluxtrap import radial
from fluxtrap.fields import VortexField, exponential_current


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--g", type=float, default=4.0)
    p.add_argument("--spin", type=int, default=-1, choices=[-1, 1])
    p.add_argument("--lams", type=float, nargs="+", default=[0.05, 0.04, 0.03, 0.025, 0.02, 0.017, 0.015])
    args = p.parse_args(argv)

    J = exponential_current()
    fld = VortexField(J, 1.0)
    pred = radial.weak_coupling_log_slope(args.g, fld)
    lams, logs = [], []
    print(f"{'lam':>8} {'ln|E|':>12} {'predicted':>12} {'converged':>9}")
    for lam in args.lams:
        st = radial.shallow_ground_state(radial.vortex_problem(J, lam, 0, args.g, args.spin))
        guess = np.log(-radial.weak_coupling_energy(lam, args.g, fld))
        shown = f"{st.log_abs_energy:12.4f}" if st.log_abs_energy is not None else f"{'-':>12}"
        print(f"{lam:8.4f} {shown} {guess:12.4f} {st.converged!s:>9}")
        if st.converged:
            lams.append(lam)
            logs.append(st.log_abs_energy)
    lams = np.asarray(lams)
    print(f"predicted slope      {pred:.6f}")
    if len(lams) >= 2:
        print(f"linear fit slope     {np.polyfit(lams**-2, logs, 1)[0]:.6f}")
    if len(lams) >= 4:
        coef, rms = radial.fit_log_energy(lams, logs)
        print(f"three-term slope     {coef[0]:.6f}  (1/lam coefficient {coef[1]:.4f}, rms {rms:.2e})")


if __name__ == "__main__":
    main()
