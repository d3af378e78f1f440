"""Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

Matrices are given by the diagonal ``d`` (length n) and the off-diagonal
``e`` (length n - 1).  Counts use the LDL^T inertia recurrence, so computed
eigenvalues carry componentwise backward errors and stay accurate for the
tiny binding energies met in weak coupling.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError

_TINY = np.finfo(float).tiny


def gershgorin_bounds(d, e):
    d = np.asarray(d, dtype=float)
    ae = np.abs(np.asarray(e, dtype=float))
    rad = np.zeros_like(d)
    rad[:-1] += ae
    rad[1:] += ae
    return float(np.min(d - rad)), float(np.max(d + rad))


class SturmCounter:
    """Counts eigenvalues of a fixed tridiagonal matrix below a shift."""

    def __init__(self, d, e):
        self.d = np.asarray(d, dtype=float).tolist()
        e = np.asarray(e, dtype=float)
        self.e2 = (e * e).tolist()
        scale = max(max(abs(x) for x in self.d), max(self.e2, default=0.0) ** 0.5, 1.0)
        self.pivmin = _TINY / np.finfo(float).eps * scale * scale
        self.n = len(self.d)

    def __call__(self, sigma: float) -> int:
        d, e2, pivmin = self.d, self.e2, self.pivmin
        count = 0
        q = d[0] - sigma
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
        for i in range(1, self.n):
            q = d[i] - sigma - e2[i - 1] / q
            if abs(q) < pivmin:
                q = -pivmin
            if q < 0:
                count += 1
        return count


def sturm_count(d, e, sigma: float) -> int:
    """Number of eigenvalues below ``sigma`` (one exactly at ``sigma`` may be counted)."""
    return SturmCounter(d, e)(sigma)


def bisect_eigenvalue(counter: SturmCounter, k: int, lo: float, hi: float,
                      rel_tol: float = 4 * np.finfo(float).eps, max_iter: int = 400) -> float:
    """The k-th smallest eigenvalue (0-based), bracketed by [lo, hi]."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rel_tol * max(abs(lo), abs(hi)):
            return mid
        if counter(mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lowest_eigenvalues(d, e, upper: float = 0.0, k_max: int | None = None):
    """All eigenvalues below ``upper`` (at most ``k_max``), ascending."""
    counter = SturmCounter(d, e)
    lo, hi = gershgorin_bounds(d, e)
    upper = min(upper, hi + 1e-12 * max(1.0, abs(hi)))
    k = counter(upper)
    if k_max is not None:
        k = min(k, k_max)
    lo = lo - 1e-12 * max(1.0, abs(lo))
    vals = []
    for idx in range(k):
        vals.append(bisect_eigenvalue(counter, idx, lo, upper))
        lo = vals[-1] - 1e-13 * max(1.0, abs(vals[-1]))
    return np.array(vals)


def inverse_iteration(d, e, ev: float, iterations: int = 3):
    """Unit eigenvector for eigenvalue ``ev`` of the tridiagonal matrix."""
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    n = len(d)
    shift = ev - 8 * np.finfo(float).eps * max(1.0, abs(ev))
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1, :] = d - shift
    ab[2, :-1] = e
    # deterministic start vector, not orthogonal to smooth ground states
    x = np.ones(n) + 0.01 * np.cos(np.arange(n))
    for _ in range(iterations):
        try:
            y = solve_banded((1, 1), ab, x, check_finite=False)
        except np.linalg.LinAlgError:
            ab[1, :] = d - shift * (1 + 1e-10)
            y = solve_banded((1, 1), ab, x, check_finite=False)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0:
            raise ConvergenceError("inverse iteration broke down", estimate=ev)
        x = y / nrm
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return x


def tridiag_matvec(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y
