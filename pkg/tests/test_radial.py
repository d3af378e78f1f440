import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from fluxtrap import radial
from fluxtrap.errors import BracketError, DomainError
from fluxtrap.fields import (
    VortexField,
    current_moments,
    exponential_current,
    gaussian_window,
    polynomial_bump,
    uniform_disk,
)
from fluxtrap.radial import (
    Discretization,
    RadialProblem,
    count_negative,
    critical_strength,
    effective_potential,
    negative_spectrum,
    rescaled_ground_state,
    strong_coupling_limit,
    vortex_problem,
    weak_coupling_condition,
    weak_coupling_energy,
)
from fluxtrap.tridiag import lowest_eigenvalues, sturm_count

J_EXP = exponential_current()
DISK = uniform_disk(5.0, 1.0)


def test_free_potential():
    p = RadialProblem(ell=2, field=uniform_disk(0.0, 1.0))
    r = np.linspace(0.1, 5, 7)
    np.testing.assert_allclose(effective_potential(p, r), 4 / r**2, rtol=1e-14)


def test_vortex_potential_at_origin():
    p = vortex_problem(J_EXP, 1.0, 0, 3.0, -1)
    assert float(effective_potential(p, np.array(1e-6))) == pytest.approx(-3.0, rel=1e-4)


def test_lambda_scaling_consistency():
    r = np.geomspace(0.01, 100, 30)
    lam = 2.7
    a = effective_potential(vortex_problem(J_EXP, lam, -1, 3.0, -1), r)
    b = effective_potential(RadialProblem(ell=-1, spin=-1, g=3.0, lam=1.0, field=VortexField(J_EXP, lam)), r)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("ell", [-2, -1, 1, 2])
@pytest.mark.parametrize("spin", [-1, 1])
def test_tail_power_and_prefactor(ell, spin):
    t = radial.fit_potential_tail(J_EXP, 1.0, ell, 3.0, spin)
    assert t.power == pytest.approx(-3.0, abs=0.1)
    assert t.coefficient == pytest.approx(t.candidates["lam_(m/pi)_(4l-sg)/2"], rel=1e-3)


def test_oscillator_ground_state():
    res = negative_spectrum(radial.oscillator_problem(1.0, 3.0, 0), Discretization(r_max=10.0, n=800))
    assert res.count == 1
    assert res.extrapolated[0] == pytest.approx(-1.0, abs=1e-3)


def test_oscillator_ladder_and_order():
    grids = [200, 400, 800, 1600]
    for ell in (0, 1, -1):
        exact = np.array([2 * (2 * k + abs(ell) + 1) for k in range(3)])
        errs = []
        for n in grids:
            d, e, _ = radial.assemble(radial.ladder_problem(1.0, ell), Discretization(r_max=10.0, n=n))
            vals = lowest_eigenvalues(d, e, 100.0, 3)
            errs.append(np.abs(vals - exact))
        assert np.max(errs[-1] / exact) < 1e-3
        orders = np.log2(np.array(errs[:-1])[:, 0] / np.array(errs[1:])[:, 0])
        assert np.all(np.abs(orders - 2.0) <= 0.2)


@pytest.mark.parametrize("fld", [DISK, polynomial_bump(15.0, 1.0), gaussian_window(8.0, 0.5, 6.0)])
@pytest.mark.parametrize("ell", [0, -1, -2, 1])
def test_no_binding_at_g_two(fld, ell):
    d, e, _ = radial.assemble(RadialProblem(ell=ell, spin=-1, g=2.0, field=fld),
                              Discretization(r_max=100.0, n=1500, inner_spacing=0.002))
    assert lowest_eigenvalues(d, e, -1e-6, 1).size == 0


def test_no_binding_at_g_two_vortex():
    for lam in (0.5, 5.0, 50.0):
        for ell in (-1, 0, 1):
            p = vortex_problem(J_EXP, lam, ell, 2.0, -1)
            d, e, _ = radial.assemble(p, Discretization(r_max=200.0, n=2000, inner_spacing=0.002))
            assert lowest_eigenvalues(d, e, -1e-6, 1).size == 0


def test_disk_channels_bind_at_physical_g():
    disc = Discretization(r_max=20000.0, n=3000, inner_spacing=0.002)
    total = 0
    for ell in (0, -1, -2):
        res = negative_spectrum(RadialProblem(ell=ell, spin=-1, g=2.0023, field=DISK), disc)
        assert res.count >= 1
        assert np.all(res.eigenvalues < 0)
        total += res.count
    assert total >= 3


def test_residuals_small():
    res = negative_spectrum(RadialProblem(ell=0, spin=-1, g=4.0, field=DISK),
                            Discretization(r_max=50.0, n=1500, inner_spacing=0.002))
    assert res.count >= 1 and np.all(res.residuals <= 1e-6)


def test_schemes_agree():
    # smooth field: the point-sampled potential scheme is only first order across jumps of B
    p = RadialProblem(ell=-1, spin=-1, g=4.0, field=polynomial_bump(15.0, 1.0))
    disc = Discretization(r_max=40.0, n=4000, inner_spacing=0.001)
    a = radial.lowest_eigenvalue(p, disc, scheme="pauli")
    b = radial.lowest_eigenvalue(p, disc, scheme="potential")
    assert a == pytest.approx(b, rel=1e-5)


def test_spin_signs_are_independent():
    disc = Discretization(r_max=400.0, n=2000, inner_spacing=0.005)
    down = radial.lowest_eigenvalue(vortex_problem(J_EXP, 1.0, 0, 3.0, -1), disc)
    up = radial.lowest_eigenvalue(vortex_problem(J_EXP, 1.0, 0, 3.0, 1), disc)
    assert down is not None and (up is None or abs(up - down) > 1e-3 * abs(down))


def test_count_examples():
    disc = Discretization(r_max=50.0, n=1000)
    assert count_negative(RadialProblem(ell=1, field=uniform_disk(0.0, 1.0)), disc) == 0
    assert count_negative(radial.oscillator_problem(1.0, 3.0, 0), Discretization(r_max=10.0, n=800)) == 1


def test_deep_well_count_grows_like_sqrt():
    V0 = np.array([1e3, 4e3, 1.6e4, 6.4e4])
    disc = Discretization(r_max=3.0, n=6000)
    counts = [count_negative(RadialProblem(ell=0, potential=lambda r, v=v: np.where(r < 1, -v, 0.0)), disc)
              for v in V0]
    p = np.polyfit(np.log(V0), np.log(counts), 1)[0]
    assert p == pytest.approx(0.5, rel=0.15)


def test_count_matches_spectrum_length():
    p = RadialProblem(ell=0, spin=-1, g=6.0, field=DISK)
    disc = Discretization(r_max=60.0, n=1500, inner_spacing=0.002)
    assert count_negative(p, disc) == negative_spectrum(p, disc).count


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 20.0), st.floats(2.0, 6.0), st.integers(-2, 2))
@example(19.0, 2.0, 0)  # eigenvalue count changes on the last r_max doubling
def test_spectrum_below_continuum_edge(B0, g, ell):
    res = negative_spectrum(RadialProblem(ell=ell, spin=-1, g=g, field=polynomial_bump(B0, 1.0)),
                            Discretization(r_max=60.0, n=800, inner_spacing=0.005, max_doublings=2))
    assert np.all(res.eigenvalues < 0)


def test_drifting_eigenvalue_reported_unconverged():
    # l = -2 state of the disk at g = 2.0023 has decay length ~500: r_max = 1000 is too small
    p = RadialProblem(ell=-2, spin=-1, g=2.0023, field=DISK)
    short = negative_spectrum(p, Discretization(r_max=1000.0, n=1500, inner_spacing=0.002, max_doublings=1))
    assert short.count == 0 and len(short.unconverged) == 1
    wide = negative_spectrum(p, Discretization(r_max=4000.0, n=1500, inner_spacing=0.002, max_doublings=1))
    assert wide.count == 1 and wide.eigenvalues[0] == pytest.approx(-4.179e-6, rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=5, max_size=40), st.floats(-3, 3))
def test_sturm_count_matches_dense(diag, shift):
    d = np.array(diag)
    e = 0.5 + 0.1 * np.arange(len(d) - 1)
    exact = eigh_tridiagonal(d, e, eigvals_only=True)
    if np.min(np.abs(exact - shift)) < 1e-9:
        return  # an eigenvalue at the shift itself may be counted either way
    assert sturm_count(d, e, shift) == int(np.sum(exact < shift))
    k = int(np.sum(exact < shift))
    np.testing.assert_allclose(lowest_eigenvalues(d, e, shift), exact[:k], atol=1e-11)


def test_critical_strength_l_minus_one():
    lam_c, counts = critical_strength(-1, -1, 2.5, J_EXP, (0.05, 50.0))
    assert 0 < lam_c < 50 and counts == (0, 1)


def test_critical_strength_rescaling_invariance():
    a, _ = critical_strength(-1, -1, 2.5, J_EXP, (0.05, 50.0))
    b, _ = critical_strength(-1, -1, 2.5, exponential_current(2.0), (0.025, 25.0))
    assert 2.0 * b == pytest.approx(a, rel=2e-3)


def test_critical_strength_bracket_error():
    with pytest.raises(BracketError):
        critical_strength(-1, -1, 2.5, J_EXP, (0.01, 0.02))


def test_l_zero_binds_at_small_lambda():
    disc = Discretization(r_max=1000.0, n=3000, inner_spacing=0.01)
    assert count_negative(vortex_problem(J_EXP, 0.1, 0, 3.0, -1), disc) >= 1


def test_weak_coupling_condition_examples():
    fld = VortexField(J_EXP, 1.0)
    c2 = weak_coupling_condition(fld, 2.0)
    assert abs(c2.relative_lhs) < 1e-4
    assert weak_coupling_condition(fld, 3.0).binds
    c0 = weak_coupling_condition(fld, 1e-8)
    assert not c0.binds and c0.lhs == pytest.approx(c0.A_squared, rel=1e-12)


def test_weak_coupling_condition_needs_zero_flux():
    with pytest.raises(DomainError):
        weak_coupling_condition(DISK, 3.0)


def test_weak_coupling_energy_properties():
    fld = VortexField(J_EXP, 1.0)
    assert weak_coupling_energy(0.1, 4.0, fld, spin=-1) == weak_coupling_energy(0.1, 4.0, fld, spin=1)
    a = math.log(-weak_coupling_energy(0.2, 4.0, fld))
    b = math.log(-weak_coupling_energy(0.4, 4.0, fld))
    assert b / a == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(DomainError):
        weak_coupling_energy(0.1, 2.0, fld)


@pytest.mark.xfail(strict=True, reason="lambda = 0.5 lies outside the asymptotic regime; "
                                       "the measured ln|E| is about 2.8 times the predicted one")
def test_weak_coupling_energy_at_half():
    fld = VortexField(J_EXP, 1.0)
    pred = math.log(-weak_coupling_energy(0.5, 4.0, fld))
    st_ = radial.shallow_ground_state(vortex_problem(J_EXP, 0.5, 0, 4.0, -1))
    assert st_.log_abs_energy == pytest.approx(pred, rel=0.25)


def test_shallow_state_resolves_tiny_energies():
    st_ = radial.shallow_ground_state(vortex_problem(J_EXP, 0.02, 0, 4.0, -1))
    assert st_.converged and st_.log_abs_energy < -25
    assert abs(math.log(-st_.refined_energy) - st_.log_abs_energy) < 1e-2


def test_fit_log_energy_recovers_synthetic():
    lam = np.array([0.04, 0.03, 0.025, 0.02, 0.017])
    y = -0.015 / lam**2 + 0.4 / lam - 1.0
    coef, rms = radial.fit_log_energy(lam, y)
    np.testing.assert_allclose(coef, [-0.015, 0.4, -1.0], rtol=1e-8)
    assert rms < 1e-9


def test_strong_coupling_limit_examples():
    assert strong_coupling_limit(1.0, 2.0023, 0, 0) == pytest.approx(-0.0023, abs=1e-15)
    assert strong_coupling_limit(1.0, 3.0, 0, -1) == -1.0
    assert strong_coupling_limit(1.0, 3.0, 0, 1) == 3.0
    with pytest.raises(DomainError):
        strong_coupling_limit(0.0, 3.0)


def test_rescaled_ground_state():
    a = rescaled_ground_state(1000.0, 3.0, 0, J_EXP)
    b = rescaled_ground_state(4000.0, 3.0, 0, J_EXP)
    assert a.value == pytest.approx(-1.0, rel=0.05)
    assert abs(b.value + 1.0) < abs(a.value + 1.0)


def test_rescaled_ground_state_at_g_two():
    r = rescaled_ground_state(1000.0, 2.0, 0, J_EXP)
    assert r.value is None or r.value >= -1e-3


def test_rescaled_ground_state_positive_target_channel():
    r = rescaled_ground_state(1000.0, 3.0, 1, J_EXP)
    assert r.target == 3.0 and not r.bound


def test_discretization_invariants():
    with pytest.raises(DomainError):
        Discretization(r_max=10.0, n=10)
    with pytest.raises(DomainError):
        RadialProblem(ell=0, spin=0, field=DISK)
    d = Discretization(r_max=1e6, n=1000, inner_spacing=1e-3)
    r = d.radius(np.arange(1001))
    assert r[0] == 0 and r[-1] == pytest.approx(1e6) and r[1] == pytest.approx(1e-3, rel=1e-3)
    assert current_moments(J_EXP).mu > 0
