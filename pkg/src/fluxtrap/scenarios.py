"""Scenario runners behind the command line.

Each runner takes a validated, fully resolved configuration dictionary and
returns ``(results, table)``: a JSON-ready results tree and a list of rows
(dicts with identical keys) for the CSV output.  Every numeric result is a
``quantity`` record carrying its error estimate and convergence flag.
"""

from __future__ import annotations

import math

import numpy as np

from . import planar, radial, specfun, zeromodes
from .errors import DomainError
from .fields import (
    VortexField,
    current_moments,
    make_current,
    make_field,
    total_flux,
    vortex_vector_potential,
)
from .tridiag import gershgorin_bounds
from .tridiag import lowest_eigenvalues as tri_lowest


def quantity(value, error=None, converged=True) -> dict:
    if value is None:
        return {"value": None, "error": None, "converged": False}
    value = float(value)
    err = None if error is None or not math.isfinite(float(error)) else float(error)
    return {"value": value if math.isfinite(value) else None, "error": err,
            "converged": bool(converged and math.isfinite(value))}


def _disc(cfg: dict, **defaults) -> radial.Discretization:
    num = dict(defaults)
    num.update(cfg.get("numerics", {}).get("radial", {}))
    return radial.Discretization(r_max=float(num["r_max"]), n=int(num["n"]),
                                 inner_spacing=num.get("inner_spacing"),
                                 refinement_levels=int(num.get("refinement_levels", 2)),
                                 rel_tol=float(num.get("rel_tol", 1e-4)),
                                 abs_tol=float(num.get("abs_tol", 1e-12)),
                                 max_doublings=int(num.get("max_doublings", 6)))


def _spectrum_record(res: radial.SpectrumResult) -> dict:
    return {
        "count": res.count,
        "eigenvalues": [quantity(v, e, True) for v, e in zip(res.eigenvalues, res.error_estimates)],
        "extrapolated": [quantity(v, e, True) for v, e in zip(res.extrapolated, res.error_estimates)],
        "residuals": [float(x) for x in res.residuals],
        "unconverged": [float(x) for x in res.unconverged],
        "r_max": res.disc.r_max if res.disc else None,
    }


# --------------------------------------------------------------------------


def run_special_functions(cfg):
    ms = cfg["m_values"]
    rows = []
    worst = 0.0
    for m in ms:
        K, E = specfun.elliptic_K(m), specfun.elliptic_E(m)
        Kc, Ec = specfun.elliptic_K(1 - m), specfun.elliptic_E(1 - m)
        leg = E * Kc + Ec * K - K * Kc - math.pi / 2
        worst = max(worst, abs(leg))
        rows.append({"m": m, "K": K, "E": E, "legendre_residual": leg})
    results = {
        "K0": quantity(specfun.elliptic_K(0.0), 0.0),
        "E0": quantity(specfun.elliptic_E(0.0), 0.0),
        "E1": quantity(specfun.elliptic_E(1.0), 0.0),
        "legendre_max_residual": quantity(worst, worst, worst <= cfg["legendre_tol"]),
        "passed": bool(specfun.elliptic_K(0.0) == math.pi / 2 and specfun.elliptic_E(0.0) == math.pi / 2
                       and specfun.elliptic_E(1.0) == 1.0 and worst <= cfg["legendre_tol"]),
    }
    return results, rows


def run_flux(cfg):
    fld = make_field(cfg["field"])
    dec = total_flux(fld)
    rows = []
    for x, y in cfg["points"]:
        phi = float(np.asarray(fld.phi_xy(np.array(x), np.array(y))))
        A1, A2 = fld.A_xy(np.array(float(x)), np.array(float(y)))
        rows.append({"x": x, "y": y, "phi": phi, "A1": float(A1), "A2": float(A2)})
    results = {
        "F": quantity(dec.F, 1e-12 * max(1.0, abs(dec.F))),
        "N": dec.N,
        "eps": quantity(dec.eps, 1e-12 * max(1.0, abs(dec.F))),
        "field": fld.describe(),
        "points": rows,
    }
    return results, rows


def run_zero_modes(cfg):
    fld = make_field(cfg["field"])
    dec = total_flux(fld)
    rows = []
    modes = []
    if dec.F > 0:
        radial_ok = getattr(fld, "is_radial", False)
        for j in range(dec.N + 1):
            I = zeromodes.binding_integral(fld, j)
            rec = {"j": j, "I_j": quantity(I, 1e-10 * abs(I)), "resonance": j == dec.N}
            row = {"j": j, "I_j": I}
            if radial_ok:
                I2 = zeromodes.binding_integral(fld, j, method="planar")
                G = zeromodes.gradient_form(fld, j)
                rec["I_j_planar"] = quantity(I2, abs(I2 - I))
                rec["gradient_form"] = quantity(G, abs(G - I))
                R = fld.support_radius
                r = np.geomspace(2 * R, 16 * R, 12)
                mod = np.abs(zeromodes.zero_mode(fld, j, np.stack([r, 0 * r], axis=-1)))
                slope = float(np.polyfit(np.log(r), np.log(mod), 1)[0])
                rec["far_field_exponent"] = quantity(slope, abs(slope - (j - dec.F)))
                row.update({"I_j_planar": I2, "gradient_form": G, "far_field_exponent": slope})
            chi0 = complex(zeromodes.zero_mode(fld, j, np.array([0.0, 0.0])))
            rec["chi_at_origin"] = [chi0.real, chi0.imag]
            modes.append(rec)
            rows.append(row)
    results = {"F": quantity(dec.F, 1e-12), "N": dec.N, "eps": quantity(dec.eps, 1e-12), "modes": modes}
    if cfg.get("balance"):
        results["balance"] = _balance_scan(cfg["balance"])
    return results, rows


def _balance_scan(bal: dict) -> dict:
    """Scan the core field of an annulus for a vanishing binding integral."""
    cores = np.linspace(bal["core_min"], bal["core_max"], int(bal["samples"]))
    found = zeromodes.search_balanced_annulus(bal["r_inner"], bal["r_outer"], bal["b_outer"],
                                              cores, int(bal.get("j", 0)))
    return {
        "j": int(bal.get("j", 0)),
        "min_relative_I": quantity(found.min_ratio, None, found.sign_change),
        "best_core": found.best_core,
        "sign_change": found.sign_change,
        "scan": [{"core": c, "relative_I": r} for c, r in zip(found.core_values, found.ratios)],
    }


def _count_channels(fld, cfg, N):
    disc = _disc(cfg, r_max=1000.0, n=2000, inner_spacing=0.002, max_doublings=6)
    ells = cfg.get("ells") or list(range(1, -(N + 3), -1))
    out = {}
    total = 0
    for ell in ells:
        res = radial.negative_spectrum(
            radial.RadialProblem(ell=int(ell), spin=int(cfg["spin"]), g=cfg["g"], field=fld), disc)
        out[str(ell)] = _spectrum_record(res)
        total += res.count
    return out, total


def run_count(cfg):
    fld = make_field(cfg["field"])
    g = cfg["g"]
    gc = zeromodes.guaranteed_count(fld)
    certs = []
    rows = []
    for j in range(gc.N + 1):
        c = zeromodes.certify(fld, g, j)
        ok = isinstance(c, zeromodes.BindingCertificate)
        d = c.as_dict()
        d["certified"] = ok
        if ok:
            d["form_value"] = quantity(c.form_value, 1e-10 * sum(abs(v) for v in c.breakdown.values()))
        certs.append(d)
        rows.append({"j": j, "I_j": gc.integrals[j], "condition": gc.flags[j], "certified": ok,
                     "form_value": c.form_value if ok else c.best_value,
                     "eps_trial": c.eps_trial if ok else None, "R": c.R if ok else None})
    results = {
        "F": quantity(gc.F, 1e-12), "N": gc.N, "eps": quantity(gc.eps, 1e-12),
        "n_B": gc.n_B, "flags": list(gc.flags),
        "binding_integrals": [quantity(v, 1e-10 * abs(v)) for v in gc.integrals],
        "certificates": certs,
        "n_certified": sum(1 for c in certs if c["certified"]),
    }
    if cfg.get("balance"):
        results["balance"] = _balance_scan(cfg["balance"])
    if cfg.get("radial_check", True) and getattr(fld, "is_radial", False):
        channels, total = _count_channels(fld, cfg, gc.N)
        results["radial"] = {"channels": channels, "total_negative": total}
    return results, rows


def _problem_from(cfg, ell, spin=None):
    spin = int(cfg["spin"] if spin is None else spin)
    if "current" in cfg and cfg["current"]:
        J = make_current(cfg["current"])
        return radial.vortex_problem(J, float(cfg["lam"]), int(ell), float(cfg["g"]), spin), J
    fld = make_field(cfg["field"])
    return radial.RadialProblem(ell=int(ell), spin=spin, g=float(cfg["g"]), lam=1.0, field=fld), None


def run_radial_spectrum(cfg):
    channels = {}
    rows = []
    for ell in cfg["ells"]:
        problem, J = _problem_from(cfg, ell)
        if J is not None:
            mu = current_moments(J).mu
            lam = max(float(cfg["lam"]), 1e-12)
            core = min(0.01, 0.05 / math.sqrt(lam * mu))
            disc = _disc(cfg, r_max=1000.0, n=3000, inner_spacing=core, max_doublings=6)
        else:
            disc = _disc(cfg, r_max=200.0, n=2000, inner_spacing=0.002, max_doublings=6)
        res = radial.negative_spectrum(problem, disc)
        rec = _spectrum_record(res)
        if J is not None and int(ell) == 0 and res.count == 0 and cfg["g"] > 2:
            # report the weak-coupling prediction when nothing is resolved
            pred = radial.weak_coupling_energy(cfg["lam"], cfg["g"], VortexField(J, 1.0))
            rec["below_floor"] = True
            rec["weak_coupling_prediction"] = quantity(pred, None, False)
        channels[str(ell)] = rec
        rows.append({"ell": int(ell), "count": res.count,
                     "lowest": float(res.eigenvalues[0]) if res.count else None,
                     "lowest_extrapolated": float(res.extrapolated[0]) if res.count else None,
                     "error": float(res.error_estimates[0]) if res.count else None})
    return {"channels": channels}, rows


def run_vortex(cfg):
    J = make_current(cfg["current"])
    lam = float(cfg["lam"])
    mom = current_moments(J)
    fld = VortexField(J, lam)
    rows = []
    for r in cfg["radii"]:
        fast = float(fld.A(r))
        slow = vortex_vector_potential(J, lam, float(r))
        rows.append({"r": r, "A_table": fast, "A_adaptive": slow, "B": float(fld.B(r))})
    r_small = np.geomspace(1e-3, 1e-1, 9)
    alpha = np.abs(fld.A(r_small) - lam * mom.mu * r_small)
    alpha_exp = float(np.polyfit(np.log(r_small), np.log(alpha), 1)[0])
    big = np.geomspace(1e3, 1e5, 5)
    tails = []
    for ell in cfg["ells"]:
        for spin in (-1, 1):
            t = radial.fit_potential_tail(J, lam, int(ell), float(cfg["g"]), spin)
            tails.append({"ell": int(ell), "spin": spin, "power": quantity(t.power, abs(t.power + 3)),
                          "coefficient": quantity(t.coefficient, None), "candidates": t.candidates})
    results = {
        "moments": {"m": quantity(mom.m, 1e-10 * mom.m), "mu": quantity(mom.mu, 1e-10 * mom.mu),
                    "a": quantity(mom.a, None)},
        "small_r_slope": quantity(float(fld.A(1e-6) / 1e-6), abs(float(fld.A(1e-6) / 1e-6) - lam * mom.mu)),
        "alpha0_exponent": quantity(alpha_exp, None),
        "B_origin": quantity(float(fld.B(1e-6)), abs(float(fld.B(1e-6)) - 2 * lam * mom.mu)),
        "far_r2A": [quantity(float(x * x * fld.A(x)), None) for x in big],
        "flux_within": [quantity(fld.flux_within(float(x)), None) for x in big],
        "total_flux": quantity(fld.flux, 0.0),
        "potential_tails": tails,
        "samples": rows,
    }
    return results, rows


def run_critical_lambda(cfg):
    J = make_current(cfg["current"])
    lam_c, counts = radial.critical_strength(int(cfg["ell"]), int(cfg["spin"]), float(cfg["g"]), J,
                                             tuple(cfg["bracket"]), rel_width=float(cfg["rel_width"]))
    res = {"lambda_c": quantity(lam_c, lam_c * cfg["rel_width"]), "bracket_counts": list(counts)}
    return res, [{"ell": cfg["ell"], "spin": cfg["spin"], "g": cfg["g"], "lambda_c": lam_c}]


def run_weak_coupling(cfg):
    J = make_current(cfg["current"])
    g = float(cfg["g"])
    fld = VortexField(J, 1.0)
    pred = radial.weak_coupling_log_slope(g, fld)
    cond = radial.weak_coupling_condition(fld, g)
    rows = []
    per_spin = {}
    for spin in cfg["spins"]:
        lams, logs = [], []
        for lam in cfg["lams"]:
            st = radial.shallow_ground_state(radial.vortex_problem(J, float(lam), 0, g, int(spin)))
            err = None
            if st.refined_energy is not None and st.energy is not None:
                err = abs(math.log(-st.refined_energy) - st.log_abs_energy) + st.shift
            rows.append({"spin": spin, "lam": lam, "inv_lam2": lam ** -2,
                         "log_abs_energy": st.log_abs_energy,
                         "predicted_log_abs_energy": math.log(-radial.weak_coupling_energy(lam, g, fld)),
                         "converged": st.converged})
            if st.converged:
                lams.append(lam)
                logs.append(st.log_abs_energy)
        entry = {"resolved": len(lams)}
        if len(lams) >= 4:
            coef, rms = radial.fit_log_energy(lams, logs)
            lin = float(np.polyfit(np.asarray(lams) ** -2.0, logs, 1)[0])
            entry.update({
                "fitted_slope": quantity(coef[0], rms),
                "inverse_lambda_coefficient": quantity(coef[1], rms),
                "linear_fit_slope": quantity(lin, None),
                "relative_deviation": quantity(abs(coef[0] / pred - 1.0), None),
                "within_tolerance": bool(abs(coef[0] / pred - 1.0) <= cfg["tolerance"]),
            })
        per_spin[str(spin)] = entry
    results = {
        "predicted_slope": quantity(pred, None),
        "A_squared_moment": quantity(cond.A_squared / (2 * math.pi), 1e-10 * cond.A_squared),
        "condition": {"lhs": quantity(cond.lhs, 1e-8 * cond.A_squared), "binds": cond.binds},
        "spins": per_spin,
    }
    return results, rows


def run_strong_coupling(cfg):
    J = make_current(cfg["current"])
    g, ell = float(cfg["g"]), int(cfg["ell"])
    mu = current_moments(J).mu
    target = radial.strong_coupling_limit(mu, g, 0, ell)
    rows = []
    vals = []
    for lam in cfg["lams"]:
        r = radial.rescaled_ground_state(float(lam), g, ell, J)
        err = None if r.value is None else abs(r.value - target)
        rows.append({"lam": lam, "rescaled": r.value, "target": target, "abs_error": err, "bound": r.bound})
        vals.append(quantity(r.value, err, r.bound))
    errs = [row["abs_error"] for row in rows if row["abs_error"] is not None]
    monotone = len(errs) == len(rows) and all(b < a for a, b in zip(errs[:-1], errs[1:]))
    results = {"target": quantity(target, 0.0), "mu": quantity(mu, 1e-10 * mu),
               "rescaled": vals, "monotone_approach": monotone}
    return results, rows


def _radial_union(fld, g, spin, k, ells):
    vals = []
    for ell in ells:
        res = radial.negative_spectrum(
            radial.RadialProblem(ell=ell, spin=spin, g=g, field=fld),
            radial.Discretization(r_max=10.0 * fld.support_radius, n=2000,
                                  inner_spacing=0.002 * fld.support_radius))
        vals.extend((float(v), float(e), ell) for v, e in zip(res.extrapolated, res.error_estimates))
    vals.sort()
    return vals[:k]


def run_planar_verify(cfg):
    fld = make_field(cfg["field"])
    g, spin, k = float(cfg["g"]), int(cfg["spin"]), int(cfg["k"])
    L = cfg.get("L") or 3.0 * fld.support_radius
    grids = []
    rows = []
    for n in cfg["grids"]:
        grid = planar.PlanarGrid(float(L), int(n))
        op = planar.assemble(grid, fld, g, spin)
        sp = planar.lowest_eigenvalues(op, k)
        rec = {"n": int(n), "h": grid.h, "eigenvalues": [quantity(v, r) for v, r in zip(sp.values, sp.residuals)],
               "asymmetry": op.asymmetry()}
        if cfg["check"] == "zero-modes":
            rec["near_zero"] = int(np.sum(np.abs(sp.values) < 5 * grid.h))
        grids.append(rec)
        for i, v in enumerate(sp.values):
            rows.append({"n": int(n), "h": grid.h, "index": i, "eigenvalue": float(v),
                         "residual": float(sp.residuals[i])})
    results = {"L": float(L), "grids": grids}
    dec = total_flux(fld)
    if 0 < dec.eps < 0.1:
        results["label"] = "indicative"
    if cfg["check"] == "zero-modes":
        results["expected_zero_modes"] = dec.N if dec.F > 0 else 0
        results["zero_mode_counts"] = [gr["near_zero"] for gr in grids]
    elif cfg["check"] == "radial-oracle":
        if len(grids) < 2:
            raise DomainError("radial-oracle check needs at least two grids")
        coarse = np.array([q["value"] for q in grids[-2]["eigenvalues"]])
        fine = np.array([q["value"] for q in grids[-1]["eigenvalues"]])
        ext = planar.richardson(coarse, fine)
        rad = _radial_union(fld, g, spin, k, list(range(-2, 3)))
        rel = [abs(e / r[0] - 1.0) for e, r in zip(ext, rad)]
        results["planar_extrapolated"] = [quantity(e, abs(e - f)) for e, f in zip(ext, fine)]
        results["radial"] = [dict(quantity(v, e), ell=ell) for v, e, ell in rad]
        results["relative_difference"] = [quantity(x, None) for x in rel]
        results["within_tolerance"] = bool(max(rel) <= cfg["tolerance"])
    return results, rows


def run_identity_check(cfg):
    J = make_current(cfg["current"])
    fld = VortexField(J, 1.0)
    A2 = 2.0 * math.pi * radial._A_squared_moment(fld)
    P = radial.log_pairing(fld)
    rhs = -2.0 * math.pi * A2
    rel = abs(P / rhs - 1.0)
    conds = []
    rows = []
    for g in cfg["g_values"]:
        c = radial.weak_coupling_condition(fld, float(g))
        conds.append({"g": g, "lhs": quantity(c.lhs, 1e-8 * A2), "relative_lhs": c.relative_lhs, "binds": c.binds})
        rows.append({"g": g, "lhs": c.lhs, "binds": c.binds})
    results = {
        "pairing": quantity(P, 1e-9 * abs(P)),
        "minus_2pi_A_squared": quantity(rhs, 1e-10 * abs(rhs)),
        "relative_difference": quantity(rel, None, rel <= cfg["tolerance"]),
        "conditions": conds,
    }
    return results, rows


def run_oscillator(cfg):
    mu, g = float(cfg["mu"]), float(cfg["g"])
    levels = int(cfg["levels"])
    rows = []
    ladder = []
    for ell in cfg["ells"]:
        prob = radial.ladder_problem(mu, int(ell))
        series = []
        for n in cfg["grids"]:
            d, e, _ = radial.assemble(prob, radial.Discretization(r_max=float(cfg["r_max"]), n=int(n)))
            series.append(tri_lowest(d, e, gershgorin_bounds(d, e)[1], levels))
        exact = np.array([2 * mu * (2 * k + abs(int(ell)) + 1) for k in range(levels)])
        errs = [np.abs(s - exact) for s in series]
        orders = [float(np.log2(a[0] / b[0])) for a, b in zip(errs[:-1], errs[1:])]
        for n, s in zip(cfg["grids"], series):
            for k in range(levels):
                rows.append({"ell": int(ell), "n": int(n), "level": k, "eigenvalue": float(s[k]),
                             "exact": float(exact[k]), "rel_error": float(abs(s[k] / exact[k] - 1))})
        ladder.append({"ell": int(ell), "exact": exact.tolist(),
                       "finest": [quantity(v, abs(v - x)) for v, x in zip(series[-1], exact)],
                       "max_rel_error": float(np.max(np.abs(series[-1] / exact - 1))),
                       "observed_orders": orders})
    shifted = radial.negative_spectrum(radial.oscillator_problem(mu, g, 0),
                                       radial.Discretization(r_max=float(cfg["r_max"]), n=int(cfg["grids"][-1])))
    results = {"ladder": ladder,
               "shifted_ground_state": _spectrum_record(shifted),
               "shifted_exact": 2 * mu - g * mu}
    return results, rows


RUNNERS = {
    "special-functions": run_special_functions,
    "flux": run_flux,
    "zero-modes": run_zero_modes,
    "count": run_count,
    "radial-spectrum": run_radial_spectrum,
    "vortex": run_vortex,
    "critical-lambda": run_critical_lambda,
    "weak-coupling": run_weak_coupling,
    "strong-coupling": run_strong_coupling,
    "planar-verify": run_planar_verify,
    "identity-check": run_identity_check,
    "oscillator": run_oscillator,
}
