import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxtrap import planar, radial, zeromodes
from fluxtrap.errors import DomainError
from fluxtrap.fields import gaussian_window, polynomial_bump, two_bumps, uniform_disk
from fluxtrap.tridiag import lowest_eigenvalues as tri_lowest
from fluxtrap.planar import (
    PlanarGrid,
    assemble,
    lowest_eigenvalues,
    rayleigh_quotient,
    richardson,
    zero_mode_residual,
)

DISK = uniform_disk(5.0, 1.0)


def test_grid_invariants():
    with pytest.raises(DomainError):
        PlanarGrid(3.0, 16)
    with pytest.raises(DomainError):
        assemble(PlanarGrid(2.0, 64), DISK, 2.0)
    g = PlanarGrid(3.0, 63)
    assert g.h == pytest.approx(6.0 / 64) and len(g.coords) == 63


def test_dimension_and_hermiticity():
    op = assemble(PlanarGrid(3.0, 48), DISK, 2.0023)
    assert op.dimension == 48 * 48
    assert op.asymmetry() == 0.0
    Ux, Uy = op.links
    assert np.allclose(np.abs(Ux), 1.0) and np.allclose(np.abs(Uy), 1.0)


def test_free_box_modes():
    L = 1.0
    vals = []
    for n in (63, 127):
        grid = PlanarGrid(L, n)
        vals.append(lowest_eigenvalues(assemble(grid, None, 2.0), k=1).values[0])
        h = grid.h
        discrete = 2 * (4 / h**2) * math.sin(math.pi * h / (4 * L)) ** 2
        assert vals[-1] == pytest.approx(discrete, rel=1e-9)
    exact = 2 * math.pi**2 / (2 * L) ** 2
    assert abs(vals[1] - exact) < abs(vals[0] - exact) / 3.5


@settings(max_examples=8, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(-1.0, 1.0))
def test_lattice_gauge_covariance(a, b, c):
    grid = PlanarGrid(3.0, 40)
    chi = lambda X, Y: a * np.sin(b * X) * np.cos(Y) + c * X * Y
    v0 = lowest_eigenvalues(assemble(grid, DISK, 3.0), k=3).values
    v1 = lowest_eigenvalues(assemble(grid, DISK, 3.0, gauge=chi), k=3).values
    np.testing.assert_allclose(v0, v1, atol=1e-8)


def test_continuum_gauge_shift_converges():
    # A -> A + grad chi sampled at link midpoints: eigenvalue difference is a discretization effect
    diffs = []
    for n in (48, 96):
        grid = PlanarGrid(3.0, n)
        base = lowest_eigenvalues(assemble(grid, DISK, 3.0), k=1).values[0]

        class Shifted:
            support_radius = DISK.support_radius

            def A_xy(self, x, y):
                a1, a2 = DISK.A_xy(x, y)
                return a1 + 0.8 * np.cos(0.9 * x) * np.cos(y), a2 - 0.8 * np.sin(0.9 * x) * np.sin(y) / 0.9

            def B_xy(self, x, y):
                return DISK.B_xy(x, y)

        shifted = lowest_eigenvalues(assemble(grid, Shifted(), 3.0), k=1).values[0]
        diffs.append(abs(shifted - base))
    assert diffs[1] < diffs[0] / 3.0


def test_oscillator_against_radial():
    # confining V = r^2 in the planar box versus the radial ladder 2(2n + |l| + 1)
    grid = PlanarGrid(6.0, 160)
    op = assemble(grid, None, 0.0, potential=lambda X, Y: X * X + Y * Y, check_box=False)
    vals = lowest_eigenvalues(op, k=3).values
    rad = []
    for ell in (0, 1, -1):
        d, e, _ = radial.assemble(radial.ladder_problem(1.0, ell), radial.Discretization(r_max=10.0, n=800))
        rad.append(tri_lowest(d, e, 100.0, 1)[0])
    np.testing.assert_allclose(vals, rad, rtol=5e-3)  # l = +-1 is a degenerate pair


def test_zero_modes_at_g_two():
    for n in (128, 256):
        grid = PlanarGrid(3.0, n)
        vals = lowest_eigenvalues(assemble(grid, DISK, 2.0), k=3).values
        assert int(np.sum(np.abs(vals) < 5 * grid.h)) == 2
        assert vals[2] > 5 * grid.h


def test_lowest_eigenvalue_bounded_below_at_g_two():
    lows = []
    for n in (64, 128):
        lows.append(lowest_eigenvalues(assemble(PlanarGrid(3.0, n), DISK, 2.0), k=1).values[0])
    assert lows[1] > -0.05 and abs(min(lows[1], 0.0)) <= abs(min(lows[0], 0.0))


def test_physical_g_lowest_channels():
    # the two lowest planar states at g = 2.0023 follow the radial l = 0, -1 eigenvalues
    grid = PlanarGrid(12.0, 240)
    vals = lowest_eigenvalues(assemble(grid, DISK, 2.0023), k=2).values
    assert np.all(vals < 0.01)
    assert vals[0] < vals[1]


def test_residuals_and_determinism():
    op = assemble(PlanarGrid(3.0, 64), DISK, 4.0)
    a = lowest_eigenvalues(op, k=3)
    b = lowest_eigenvalues(op, k=3)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.all(a.residuals < 1e-6 * np.max(np.abs(op.matrix.diagonal())))


def test_k_must_be_positive():
    with pytest.raises(DomainError):
        lowest_eigenvalues(assemble(PlanarGrid(3.0, 40), DISK, 3.0), k=0)


def test_richardson():
    h = np.array([0.1, 0.05])
    vals = 1.0 + 3.0 * h**2
    assert richardson(vals[0], vals[1]) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("fld,j", [(DISK, 0), (DISK, 1), (two_bumps(0.75, 0.6, 1.2), 0), (two_bumps(0.75, 0.6, 1.2), 1)])
def test_zero_mode_residual_converges(fld, j):
    r = [zero_mode_residual(PlanarGrid(3.0 * fld.support_radius, n), fld, j) for n in (64, 128, 256)]
    assert r[1] <= r[0] / 2 and r[2] <= r[1] / 2


def test_zero_mode_residual_free():
    assert zero_mode_residual(PlanarGrid(2.0, 40), uniform_disk(0.0, 0.5), 0) == 0.0


def test_certified_trial_has_negative_rayleigh_quotient():
    # sampled trial state from a certificate, evaluated in the discrete operator
    g = 4.0
    cert = zeromodes.certify(DISK, g, 0)
    assert cert.form_value < 0
    grid = PlanarGrid(4.0, 128)
    X, Y = grid.mesh()
    psi = zeromodes.zero_mode(DISK, 0, np.stack([X, Y], axis=-1))
    if cert.bump is not None:
        psi = psi + cert.eps_trial * cert.bump.values(X, Y)
    rq = rayleigh_quotient(assemble(grid, DISK, g), psi)
    norm2 = float(np.sum(np.abs(psi) ** 2) * grid.h**2)
    assert rq < 0
    assert rq == pytest.approx(cert.form_value / norm2, rel=0.05)


@pytest.mark.parametrize("fld", [uniform_disk(5.0, 1.0), polynomial_bump(15.0, 1.0), gaussian_window(8.0, 0.5, 6.0)])
def test_oracle_equivalence_quick(fld):
    L = 3.0 * fld.support_radius
    vals = [lowest_eigenvalues(assemble(PlanarGrid(L, n), fld, 4.0), k=3).values for n in (64, 128)]
    ext = richardson(vals[0], vals[1])
    rad = []
    for ell in range(-2, 3):
        res = radial.negative_spectrum(radial.RadialProblem(ell=ell, spin=-1, g=4.0, field=fld),
                                       radial.Discretization(r_max=10 * fld.support_radius, n=2000,
                                                             inner_spacing=0.002 * fld.support_radius))
        rad.extend(res.extrapolated.tolist())
    rad = np.sort(rad)[:3]
    np.testing.assert_allclose(ext, rad, rtol=0.03)
