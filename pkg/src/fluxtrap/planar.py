"""Lattice Pauli operator on a square box with Dirichlet walls.

Nodes sit at x_k = -L + k h, k = 1..n, with h = 2L/(n + 1), so the walls at
+-L carry the Dirichlet condition.  Minimal coupling enters through link
phases U = exp(-i h A(midpoint)) (Peierls substitution):

    (H psi)(x) = h^-2 sum_e [2 psi(x) - U_e(x) psi(x + h e) - conj(U_e(x - h e)) psi(x - h e)]
                 + spin (g/2) B(x) psi(x)

which is Hermitian by construction and covariant under lattice gauge
transformations.  B on the diagonal is the cell average around each node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConvergenceError, DomainError
from .fields import total_flux


@dataclass(frozen=True)
class PlanarGrid:
    L: float
    n: int

    def __post_init__(self):
        if self.n < 32:
            raise DomainError("PlanarGrid needs n >= 32")
        if not self.L > 0:
            raise DomainError("box half-width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n + 1)

    @property
    def coords(self) -> np.ndarray:
        return -self.L + self.h * np.arange(1, self.n + 1)

    def mesh(self):
        """(X, Y) with X[iy, ix]; flat index = iy * n + ix."""
        c = self.coords
        return np.meshgrid(c, c)

    def check_support(self, fld, factor: float = 3.0):
        R = getattr(fld, "support_radius", math.inf)
        if math.isfinite(R) and self.L < factor * R:
            raise DomainError(f"box half-width {self.L} below {factor} x support radius {R}")


@dataclass
class PauliOperator:
    matrix: sp.csr_matrix
    grid: PlanarGrid
    g: float
    spin: int
    B_nodes: np.ndarray
    links: tuple  # (Ux, Uy): phases on x- and y-links, shape (n, n-1) and (n-1, n)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def asymmetry(self) -> float:
        d = self.matrix - self.matrix.getH()
        return float(abs(d).max()) if d.nnz else 0.0


def _cell_average(fld, X, Y, h, sub: int = 4):
    off = (np.arange(sub) + 0.5) / sub - 0.5
    acc = np.zeros_like(X)
    for ox in off:
        for oy in off:
            acc += fld.B_xy(X + ox * h, Y + oy * h)
    return acc / sub**2


def link_phases(grid: PlanarGrid, fld, gauge: Callable | None = None):
    """Ux[iy, ix] joins (ix, iy) -> (ix+1, iy); Uy[iy, ix] joins (ix, iy) -> (ix, iy+1)."""
    X, Y = grid.mesh()
    h = grid.h
    if fld is None:
        ax = np.zeros((grid.n, grid.n - 1))
        ay = np.zeros((grid.n - 1, grid.n))
    else:
        ax, _ = fld.A_xy(X[:, :-1] + 0.5 * h, Y[:, :-1])
        _, ay = fld.A_xy(X[:-1, :], Y[:-1, :] + 0.5 * h)
    theta_x = h * np.asarray(ax)
    theta_y = h * np.asarray(ay)
    if gauge is not None:
        chi = gauge(X, Y)
        theta_x = theta_x + (chi[:, 1:] - chi[:, :-1])
        theta_y = theta_y + (chi[1:, :] - chi[:-1, :])
    return np.exp(-1j * theta_x), np.exp(-1j * theta_y)


def assemble(grid: PlanarGrid, fld, g: float, spin: int = -1, potential: Callable | None = None,
             gauge: Callable | None = None, check_box: bool = True) -> PauliOperator:
    """Sparse Hermitian lattice Pauli operator of dimension n^2.

    ``potential`` adds a scalar V(x, y) to the diagonal (test problems);
    ``gauge`` adds the lattice gradient of a function to the link angles.
    """
    if spin not in (-1, 1):
        raise DomainError("spin must be +1 or -1")
    if fld is not None and check_box:
        grid.check_support(fld)
    n, h = grid.n, grid.h
    X, Y = grid.mesh()
    Ux, Uy = link_phases(grid, fld, gauge)
    Bn = np.zeros_like(X) if fld is None else _cell_average(fld, X, Y, h)
    diag = np.full(X.shape, 4.0 / h**2) + spin * 0.5 * g * Bn
    if potential is not None:
        diag = diag + potential(X, Y)
    idx = np.arange(n * n).reshape(n, n)
    rows = [idx[:, :-1].ravel(), idx[:-1, :].ravel()]
    cols = [idx[:, 1:].ravel(), idx[1:, :].ravel()]
    vals = [(-Ux / h**2).ravel(), (-Uy / h**2).ravel()]
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    upper = sp.coo_matrix((v, (r, c)), shape=(n * n, n * n))
    H = upper + upper.getH() + sp.diags(diag.ravel().astype(complex))
    return PauliOperator(H.tocsr(), grid, g, spin, Bn, (Ux, Uy))


@dataclass
class PlanarSpectrum:
    values: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def lowest_eigenvalues(op: PauliOperator, k: int = 3, tol: float = 1e-9,
                       return_vectors: bool = False, maxiter: int | None = None) -> PlanarSpectrum:
    """k smallest eigenvalues by shift-invert Lanczos below the spectrum.

    The shift lies under a Gershgorin-type lower bound, so the eigenvalues
    nearest to it are the lowest ones.  The start vector is fixed.  A few
    extra pairs are computed so that degenerate levels are not dropped.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    H = op.matrix
    lower = float(np.min(H.diagonal().real)) - 4.0 / op.grid.h**2
    bmin = -0.5 * op.g * float(np.max(np.abs(op.B_nodes))) if op.B_nodes.size else 0.0
    sigma = min(lower, bmin) - 1.0
    n = H.shape[0]
    v0 = (1.0 + 0.5 * np.cos(0.37 * np.arange(n))).astype(complex)
    try:
        kk = min(n - 1, k + 4)
        vals, vecs = eigsh(H, k=kk, sigma=sigma, which="LM", v0=v0, tol=tol, maxiter=maxiter,
                           ncv=min(n, max(2 * kk + 1, 20)))
    except ArpackNoConvergence as exc:
        raise ConvergenceError("shift-invert Lanczos did not converge", estimate=exc.eigenvalues,
                               iterations=maxiter) from exc
    order = np.argsort(vals.real)[:k]
    vals, vecs = vals[order].real, vecs[:, order]
    res = np.array([np.linalg.norm(H @ vecs[:, i] - vals[i] * vecs[:, i]) for i in range(k)])
    return PlanarSpectrum(vals, res, vecs if return_vectors else None,
                          {"shift": sigma, "dimension": n, "h": op.grid.h})


def richardson(coarse: np.ndarray, fine: np.ndarray, order: float = 2.0):
    """Extrapolate values from spacings h and h/2 of an O(h^order) scheme."""
    f = 2.0**order
    return (f * np.asarray(fine) - np.asarray(coarse)) / (f - 1.0)


def rayleigh_quotient(op: PauliOperator, psi) -> float:
    v = np.asarray(psi, dtype=complex).ravel()
    return float(np.real(np.vdot(v, op.matrix @ v)) / np.real(np.vdot(v, v)))


def covariant_D(grid: PlanarGrid, fld, values: np.ndarray, links=None) -> np.ndarray:
    """D = -i[(d1 - iA1) + i(d2 - iA2)] by covariant central differences.

    Returned on the interior nodes (one node away from the walls).
    """
    h = grid.h
    Ux, Uy = links if links is not None else link_phases(grid, fld)
    psi = np.asarray(values, dtype=complex)
    # forward and backward transported neighbours
    fx = Ux[1:-1, 1:] * psi[1:-1, 2:]
    bx = np.conj(Ux[1:-1, :-1]) * psi[1:-1, :-2]
    fy = Uy[1:, 1:-1] * psi[2:, 1:-1]
    by = np.conj(Uy[:-1, 1:-1]) * psi[:-2, 1:-1]
    d1 = (fx - bx) / (2 * h)
    d2 = (fy - by) / (2 * h)
    return -1j * (d1 + 1j * d2)


def zero_mode_residual(grid: PlanarGrid, fld, j: int) -> float:
    """||D_h chi_j|| / ||chi_j|| times L on the interior of the box (dimensionless)."""
    from .zeromodes import zero_mode

    dec = total_flux(fld) if fld.flux > 0 else None
    if dec is not None and j > dec.N:
        raise DomainError(f"j = {j} exceeds N = {dec.N}")
    X, Y = grid.mesh()
    if dec is None:
        if j != 0:
            raise DomainError("without positive flux only j = 0 is available")
        chi = np.exp(-fld.phi_xy(X, Y)).astype(complex)
    else:
        chi = zero_mode(fld, j, np.stack([X, Y], axis=-1))
    Dchi = covariant_D(grid, fld, chi)
    den = np.linalg.norm(chi[1:-1, 1:-1])
    return float(grid.L * np.linalg.norm(Dchi) / den)
