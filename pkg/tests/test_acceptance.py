"""End-to-end acceptance checks, one per criterion, driven through the CLI presets.

Each test prints a single ``criterion N: PASS|FAIL ...`` line.
"""

import math
import time

import numpy as np
import pytest

from fluxtrap.cli import EXIT_OK, apply_overrides, load_config, run_scenario
from fluxtrap.specfun import elliptic_E, elliptic_K


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return emit


def run_preset(name, overrides=()):
    cfg = apply_overrides(load_config(name), list(overrides))
    t0 = time.perf_counter()
    report, rows, code = run_scenario(cfg)
    assert code == EXIT_OK, report["diagnostics"]
    return report["results"], time.perf_counter() - t0


def values(items):
    return np.array([v["value"] for v in items])


def test_criterion_01_special_functions(verdict):
    res, dt = run_preset("c01_special_functions")
    exact = elliptic_K(0.0) == math.pi / 2 and elliptic_E(0.0) == math.pi / 2 and elliptic_E(1.0) == 1.0
    worst = max(abs(elliptic_E(m) * elliptic_K(1 - m) + elliptic_E(1 - m) * elliptic_K(m)
                    - elliptic_K(m) * elliptic_K(1 - m) - math.pi / 2) for m in np.arange(1, 10) / 10)
    ok = exact and res["passed"] and worst < 1e-10 and res["legendre_max_residual"]["value"] < 1e-10 and dt < 1.0
    assert verdict(1, ok, f"exact values {exact}, Legendre residual {worst:.2e}, {dt:.3f} s")


def test_criterion_02_zero_modes_planar(verdict):
    res, dt = run_preset("c02_zero_modes_planar", ["grids=[64,128,256]"])
    grids = res["grids"]
    h = [g["h"] for g in grids]
    ev = [values(g["eigenvalues"]) for g in grids]
    counts = [int(np.sum(np.abs(e) < 5 * hh)) for e, hh in zip(ev, h)]
    gap = all(e[2] > 5 * hh for e, hh in zip(ev[1:], h[1:]))
    # discretization error of the near-zero pair shrinks under refinement
    steps = [np.max(np.abs(ev[i + 1][:2] - ev[i][:2])) for i in range(len(ev) - 1)]
    ok = counts[1:] == [2, 2] and gap and h[2] < h[1] < h[0] and steps[1] < steps[0] and dt < 120
    detail = (f"near-zero counts at n=128,256: {counts[1:]}, lowest {ev[2][:2].round(5).tolist()} "
              f"(5h = {5 * h[2]:.3f}), refinement steps {[f'{s:.1e}' for s in steps]}, {dt:.1f} s")
    assert verdict(2, ok, detail)


def test_criterion_03_guaranteed_count(verdict):
    res, dt = run_preset("c03_guaranteed_count")
    certs = [c for c in res["certificates"] if c["certified"] and c["form_value"]["value"] < 0]
    radial = res["radial"]["total_negative"]
    ok = res["n_B"] == 3 and sorted(c["j"] for c in certs) == [0, 1, 2] and radial >= 3 and dt < 60
    per = {ell: ch["count"] for ell, ch in res["radial"]["channels"].items()}
    assert verdict(3, ok, f"n_B = {res['n_B']}, certified j = {[c['j'] for c in certs]}, "
                          f"radial negatives {radial} {per}, {dt:.1f} s")


def test_criterion_04_sign_changing_annulus(verdict):
    # build an annulus whose I_0 is close to zero, then require a certificate that needs eps != 0
    res, dt = run_preset("c04_sign_changing_annulus")
    bal = res["balance"]
    balanced = bal["sign_change"] or bal["min_relative_I"]["value"] < 1e-2
    j0 = next(c for c in res["certificates"] if c["j"] == 0)
    via_eps = j0["certified"] and j0["form_value"]["value"] < 0 and j0["eps_trial"] != 0.0
    ok = balanced and via_eps and res["n_certified"] == res["N"] + 1 and dt < 60
    detail = (f"smallest I_0/int|B||chi_0|^2 over the core scan = {bal['min_relative_I']['value']:.3f} "
              f"(sign change: {bal['sign_change']}); j = 0 certificate eps_trial = {j0['eps_trial']}, "
              f"form = {j0['form_value']['value']:.3f}; certified {res['n_certified']} (N = {res['N']})")
    assert verdict(4, ok, detail)


def test_criterion_05_identity(verdict):
    res, dt = run_preset("c05_identity")
    rel = res["relative_difference"]["value"]
    binds = {c["g"]: c["binds"] for c in res["conditions"]}
    ok = rel < 1e-4 and binds[1.9] is False and binds[2.1] is True and dt < 60
    assert verdict(5, ok, f"relative difference {rel:.2e}, binds {binds}, {dt:.1f} s")


def test_criterion_06_weak_coupling(verdict):
    res, dt = run_preset("c06_weak_coupling")
    pred = res["predicted_slope"]["value"]
    fit = res["spins"]["-1"]["fitted_slope"]["value"]
    dev = abs(fit - pred) / abs(pred)
    ok = dev <= 0.25 and res["spins"]["-1"]["resolved"] >= 3 and dt < 600
    assert verdict(6, ok, f"fitted slope {fit:.6f} vs predicted {pred:.6f} (deviation {dev:.2%}), {dt:.1f} s")


def test_criterion_07_strong_coupling(verdict):
    res, dt = run_preset("c07_strong_coupling")
    r1e3, r4e3 = values(res["rescaled"])
    err = [abs(r1e3 + 1.0), abs(r4e3 + 1.0)]
    ok = err[1] <= 0.05 and err[1] < err[0] and dt < 300
    assert verdict(7, ok, f"rescaled ground state {r1e3:.5f} (1e3), {r4e3:.5f} (4e3), {dt:.1f} s")


def test_criterion_08_small_lambda(verdict):
    res, dt = run_preset("c08_small_lambda")
    ch = res["channels"]
    ok = ch["0"]["count"] >= 1 and ch["1"]["count"] == 0 and ch["-1"]["count"] == 0 and dt < 120
    low = ch["0"]["eigenvalues"][0]["value"] if ch["0"]["count"] else None
    assert verdict(8, ok, f"counts l=-1,0,1: {ch['-1']['count']}, {ch['0']['count']}, {ch['1']['count']}; "
                          f"l=0 ground state {low}, {dt:.1f} s")


def test_criterion_09_oracle_equivalence(verdict):
    worst, total = {}, 0.0
    for name in ("c09_oracle_disk", "c09_oracle_bump", "c09_oracle_gaussian"):
        res, dt = run_preset(name)
        total += dt
        rel = values(res["relative_difference"])
        assert len(rel) == 3
        worst[name.split("_")[-1]] = float(rel.max())
    ok = max(worst.values()) <= 0.02 and total < 600
    assert verdict(9, ok, f"max relative difference {({k: round(v, 5) for k, v in worst.items()})}, {total:.1f} s")


def test_criterion_10_oscillator(verdict):
    res, dt = run_preset("c10_oscillator")
    s = next(l for l in res["ladder"] if l["ell"] == 0)
    rel = np.abs(values(s["finest"]) - np.array(s["exact"])) / np.array(s["exact"])
    orders = [o for l in res["ladder"] for o in l["observed_orders"]]
    ok = s["exact"] == [2.0, 6.0, 10.0] and rel.max() <= 1e-3 and all(abs(o - 2.0) <= 0.2 for o in orders) and dt < 30
    assert verdict(10, ok, f"s-wave max relative error {rel.max():.2e}, orders "
                           f"{min(orders):.3f}..{max(orders):.3f}, {dt:.2f} s")
