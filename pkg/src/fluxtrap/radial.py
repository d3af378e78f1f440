"""Partial-wave Pauli operators on the half line.

For a rotationally symmetric field the spin-``s`` Pauli operator splits into

    H_l = -d^2/dr^2 - (1/r) d/dr + V_l(r),   V_l = (lam A + l/r)^2 + s (g/2) lam B

on L^2(R+, r dr).  Two finite-volume discretizations on a cell-centred grid
are provided:

* ``scheme="pauli"``: the kinetic part is written as Q*Q with Q an
  exponentially fitted difference of D = d/dr + (A + l/r) (or of its adjoint
  for l > 0).  Its kernel is the sampled zero mode, so the g = 2, spin-down
  operator is exactly non-negative and small g - 2 perturbations bind without
  discretization artefacts.
* ``scheme="potential"``: the plain Laplacian plus V sampled at cell centres,
  used for potential-only problems such as the oscillator self-tests.

Both are symmetric tridiagonal after scaling by the cell masses; the
eigenvalues come from ``fluxtrap.tridiag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, DomainError
from .fields import CurrentProfile, VortexField, current_moments
from .specfun import QuadratureSpec, integrate
from .tridiag import (
    SturmCounter,
    inverse_iteration,
    lowest_eigenvalues,
    tridiag_matvec,
)

_GL2 = np.array([-1.0, 1.0]) / math.sqrt(3.0)


def _log_sinh(x: float) -> float:
    return x + math.log1p(-math.exp(-2 * x)) - math.log(2.0)


@dataclass(frozen=True)
class RadialProblem:
    """One partial wave: orbital index ``ell``, ``spin`` = +1 or -1.

    ``field`` supplies A(r) and B(r) at unit strength; ``lam`` scales both.
    A problem with ``potential`` set ignores the field and uses V directly.
    """

    ell: int
    spin: int = -1
    g: float = 2.0
    lam: float = 1.0
    field: object = None
    potential: Callable | None = None

    def __post_init__(self):
        if self.spin not in (-1, 1):
            raise DomainError("spin must be +1 or -1")
        if self.field is None and self.potential is None:
            raise DomainError("a radial problem needs a field or a potential")


def effective_potential(problem: RadialProblem, r):
    """V_l(r) = (lam A + l/r)^2 + spin (g/2) lam B."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("effective_potential needs r > 0")
    if problem.potential is not None:
        return problem.potential(r)
    f = problem.field
    lam = problem.lam
    return (lam * f.A(r) + problem.ell / r) ** 2 + problem.spin * 0.5 * problem.g * lam * f.B(r)


@dataclass(frozen=True)
class Discretization:
    """Cell-centred grid on (0, r_max) with sinh stretching.

    ``inner_spacing`` is the cell width near the origin; when it is None or
    at least r_max/n the grid is uniform.  Refinement doubles ``n`` and halves
    ``inner_spacing``, which keeps the mapping fixed (needed for Richardson
    extrapolation).
    """

    r_max: float
    n: int = 1000
    inner_spacing: float | None = None
    refinement_levels: int = 2
    rel_tol: float = 1e-4
    abs_tol: float = 1e-12
    max_doublings: int = 6

    def __post_init__(self):
        if self.n < 64:
            raise DomainError("Discretization needs n >= 64")
        if not self.r_max > 0:
            raise DomainError("r_max must be positive")

    @property
    def stretch(self) -> float:
        h0 = self.inner_spacing
        if h0 is None or h0 * self.n >= self.r_max:
            return 0.0
        # solve gamma / sinh(gamma) = n h0 / r_max in logarithmic form
        target = math.log(self.n * h0 / self.r_max)
        return brentq(lambda gm: math.log(gm) - _log_sinh(gm) - target, 1e-9, 1e4, xtol=1e-14)

    def radius(self, x):
        """Map x in [0, n + 1] (cell units) to radius."""
        gm = self.stretch
        u = np.asarray(x, dtype=float) / self.n
        if gm == 0.0:
            return self.r_max * u
        # sinh(gm u) / sinh(gm) without overflow
        return self.r_max * np.exp(gm * (u - 1.0)) * (-np.expm1(-2 * gm * u)) / (-math.expm1(-2 * gm))

    def refined(self, factor: int = 2) -> "Discretization":
        h0 = None if self.inner_spacing is None else self.inner_spacing / factor
        if self.inner_spacing is not None and self.stretch == 0.0:
            h0 = None
        return replace(self, n=self.n * factor, inner_spacing=h0)

    def extended(self) -> "Discretization":
        """Double r_max keeping the spacing near the origin."""
        gm = self.stretch
        if gm == 0.0:
            return replace(self, r_max=2 * self.r_max, n=2 * self.n)
        h0 = self.inner_spacing
        extra = int(math.ceil(self.n * math.log(2.0) / gm))
        return replace(self, r_max=2 * self.r_max, n=self.n + min(extra, self.n), inner_spacing=h0)

    @classmethod
    def for_scales(cls, core: float, extent: float, n: int = 1200, **kw) -> "Discretization":
        """Resolve features of size ``core`` near the origin out to ``extent``."""
        return cls(r_max=extent, n=n, inner_spacing=core, **kw)


@dataclass
class RadialGrid:
    centers: np.ndarray  # r_1 .. r_n
    faces: np.ndarray  # r_{1/2} = 0 .. r_{n+1/2} = r_max
    ghost: float  # centre of the Dirichlet ghost cell n + 1
    mass: np.ndarray  # int_cell r dr

    @classmethod
    def build(cls, disc: Discretization) -> "RadialGrid":
        n = disc.n
        faces = disc.radius(np.arange(n + 1))
        centers = disc.radius(np.arange(n) + 0.5)
        ghost = float(disc.radius(n + 0.5))
        mass = 0.5 * (faces[1:] ** 2 - faces[:-1] ** 2)
        return cls(centers=centers, faces=faces, ghost=ghost, mass=mass)


def _field_integral(A: Callable, r0: np.ndarray, r1: np.ndarray) -> np.ndarray:
    c, h = 0.5 * (r0 + r1), 0.5 * (r1 - r0)
    return h * (A(c + h * _GL2[0]) + A(c + h * _GL2[1]))


def assemble(problem: RadialProblem, disc: Discretization, scheme: str | None = None):
    """Symmetric tridiagonal (d, e) and the grid for one partial wave."""
    grid = RadialGrid.build(disc)
    rc, rf, w = grid.centers, grid.faces, grid.mass
    n = len(rc)
    right = np.concatenate([rc[1:], [grid.ghost]])  # neighbour across face i+1/2
    dist = right - rc
    cf = rf[1:] / dist  # face weights r_face / (r_{i+1} - r_i)
    if scheme is None:
        scheme = "potential" if problem.potential is not None else "pauli"

    if scheme == "potential":
        Kd = cf.copy()
        Kd[1:] += cf[:-1]
        V = effective_potential(problem, rc)
        d = Kd / w + V
    elif scheme == "pauli":
        if problem.field is None:
            raise DomainError("the pauli scheme needs a field")
        f, lam, ell, g = problem.field, problem.lam, problem.ell, problem.g
        s = 1.0 if ell <= 0 else -1.0
        # spin-down: D*D - (g-2)/2 B  or  DD* - (g+2)/2 B; spin-up flips the constants
        if problem.spin < 0:
            cB = -(g - 2.0) / 2.0 if s > 0 else -(g + 2.0) / 2.0
        else:
            cB = (g + 2.0) / 2.0 if s > 0 else (g - 2.0) / 2.0
        dphi = s * (lam * _field_integral(f.A, rc, right) + ell * np.log(right / rc))
        a2 = np.exp(dphi)
        b2 = np.exp(-dphi)
        Kd = cf * b2
        Kd[1:] += cf[:-1] * a2[:-1]
        # cell average of B with weight r: difference of enclosed flux over the cell
        enc = f.enclosed_flux(rf)
        Bbar = lam * np.diff(enc) / w
        d = Kd / w + cB * Bbar
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    e = -cf[:-1] / np.sqrt(w[:-1] * w[1:])
    return d, e, grid


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray  # converged negative eigenvalues, ascending
    extrapolated: np.ndarray  # Richardson estimates (same order)
    error_estimates: np.ndarray
    residuals: np.ndarray
    r: np.ndarray
    eigenfunctions: np.ndarray  # psi(r_i), normalized in L^2(r dr); shape (k, n)
    unconverged: np.ndarray = field(default_factory=lambda: np.zeros(0))
    disc: Discretization | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.eigenvalues)


def _solve(problem, disc, k_max=None, scheme=None, vectors=False):
    d, e, grid = assemble(problem, disc, scheme)
    vals = lowest_eigenvalues(d, e, 0.0, k_max)
    if not vectors:
        return vals, None, None, grid
    vecs, res = [], []
    for ev in vals:
        v = inverse_iteration(d, e, ev)
        res.append(np.linalg.norm(tridiag_matvec(d, e, v) - ev * v))
        vecs.append(v / np.sqrt(grid.mass))
    return vals, np.array(vecs).reshape(len(vals), len(grid.mass)), np.array(res), grid


def count_negative(problem: RadialProblem, disc: Discretization, scheme: str | None = None) -> int:
    """Number of negative eigenvalues of the discretized operator (Sturm count at 0)."""
    d, e, _ = assemble(problem, disc, scheme)
    return SturmCounter(d, e)(0.0)


def lowest_eigenvalue(problem: RadialProblem, disc: Discretization, scheme: str | None = None):
    """Lowest negative eigenvalue of the discrete operator, or None."""
    vals, *_ = _solve(problem, disc, k_max=1, scheme=scheme)
    return float(vals[0]) if len(vals) else None


def _stable(a, b, disc: Discretization) -> np.ndarray:
    m = min(len(a), len(b))
    return np.abs(np.asarray(b[:m]) - np.asarray(a[:m])) <= np.maximum(disc.abs_tol, disc.rel_tol * np.abs(a[:m]))


def negative_spectrum(problem: RadialProblem, disc: Discretization, scheme: str | None = None,
                      k_max: int | None = None) -> SpectrumResult:
    """Negative eigenvalues with refinement, Richardson and r_max-stability checks.

    r_max is doubled until the eigenvalues move by less than
    ``max(abs_tol, rel_tol |E|)``; eigenvalues that keep drifting are reported
    in ``unconverged`` rather than as bound states.
    """
    base = disc
    vals, vecs, res, grid = _solve(problem, base, k_max, scheme, vectors=True)
    history = [(base.r_max, vals.tolist())]
    for _ in range(base.max_doublings):
        wider = base.extended()
        wvals, *_ = _solve(problem, wider, k_max, scheme)
        history.append((wider.r_max, wvals.tolist()))
        if len(wvals) == len(vals) and np.all(_stable(vals, wvals, base)):
            break
        base = wider
        vals, vecs, res, grid = _solve(problem, base, k_max, scheme, vectors=True)
    # eigenvalues that moved by less than the tolerance over the last doubling
    converged = np.zeros(len(vals), dtype=bool)
    if len(history) >= 2:
        prev, last = np.asarray(history[-2][1]), np.asarray(history[-1][1])
        other = last if history[-2][0] == base.r_max else prev
        m = min(len(vals), len(other))
        converged[:m] = _stable(vals[:m], other[:m], base)

    # Richardson extrapolation over refinement levels (second-order scheme)
    levels = [vals]
    cur = base
    for _ in range(max(base.refinement_levels - 1, 0)):
        cur = cur.refined()
        lv, *_ = _solve(problem, cur, k_max, scheme)
        levels.append(lv)
    m = min(len(l) for l in levels)
    if len(levels) >= 2 and m:
        fine, coarse = levels[-1][:m], levels[-2][:m]
        extrap = (4.0 * fine - coarse) / 3.0
        err = np.abs(extrap - fine)
    else:
        extrap = vals[:m].copy()
        err = np.full(m, np.nan)
    extrap = np.concatenate([extrap, np.full(len(vals) - m, np.nan)])
    err = np.concatenate([err, np.full(len(vals) - m, np.nan)])

    keep = converged
    return SpectrumResult(
        eigenvalues=vals[keep],
        extrapolated=extrap[keep],
        error_estimates=err[keep],
        residuals=res[keep] if len(res) else res,
        r=grid.centers,
        eigenfunctions=vecs[keep] if len(vecs) else vecs,
        unconverged=vals[~keep],
        disc=base,
        diagnostics={"r_max_history": history, "refinement": [l.tolist() for l in levels]},
    )


# --------------------------------------------------------------------------
# vortex couplings


def vortex_problem(current: CurrentProfile, lam: float, ell: int, g: float, spin: int = -1) -> RadialProblem:
    return RadialProblem(ell=ell, spin=spin, g=g, lam=lam, field=VortexField(current, 1.0))


def critical_strength(ell: int, spin: int, g: float, current: CurrentProfile,
                      bracket: tuple[float, float], disc: Discretization | None = None,
                      rel_width: float = 1e-3, scheme: str | None = None):
    """Current strength where the lowest eigenvalue of the channel crosses 0.

    Returns ``(lam_c, (count_lo, count_hi))`` after geometric bisection of
    the bracket to relative width ``rel_width``.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise BracketError("bracket must satisfy 0 < lo < hi")
    if disc is None:
        mu = current_moments(current).mu
        disc = Discretization.for_scales(core=min(0.02, 0.1 / math.sqrt(hi * mu)), extent=400.0, n=1500)

    def count(lam):
        return count_negative(vortex_problem(current, lam, ell, g, spin), disc, scheme)

    c_lo, c_hi = count(lo), count(hi)
    if (c_lo > 0) == (c_hi > 0):
        raise BracketError(f"no binding transition in [{lo}, {hi}]: counts {c_lo}, {c_hi}")
    bound_hi = c_hi > 0
    while hi / lo - 1.0 > rel_width:
        mid = math.sqrt(lo * hi)
        if (count(mid) > 0) == bound_hi:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi), (c_lo, c_hi)


def _A_squared_moment(field) -> float:
    """int_0^inf A(r)^2 r dr."""
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, max_subdivisions=4000)
    return integrate(lambda r: field.A(r) ** 2 * r, 0.0, np.inf, spec)


def log_pairing(field) -> float:
    """int int B(x) ln|x - x'| B(x') d^2x d^2x' for a radial field.

    Uses B alone: 4 pi^2 * 2 int B(r) r ln r C(r) dr with C(r) = int_0^r B(s) s ds,
    where the inner integral is recomputed by quadrature at every outer node.
    """
    spec_in = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-11, max_subdivisions=2000)
    spec_out = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-9, max_subdivisions=4000)
    Bs = lambda s: field.B(s) * s

    def C(r):
        r = np.atleast_1d(r)
        return np.array([integrate(Bs, 0.0, float(x), spec_in) if x > 0 else 0.0 for x in r])

    def outer(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lnr = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
        return 2.0 * field.B(r) * r * lnr * C(r)

    R = getattr(field, "support_radius", math.inf)
    b = R if math.isfinite(R) else np.inf
    return 4.0 * math.pi**2 * integrate(outer, 0.0, b, spec_out)


@dataclass(frozen=True)
class WeakCouplingCondition:
    lhs: float
    binds: bool
    A_squared: float  # int |A|^2 d^2x
    pairing: float  # int int B ln|x-x'| B
    relative_lhs: float  # lhs / int |A|^2 d^2x


def weak_coupling_condition(fld, g: float, rel_floor: float = 1e-6) -> WeakCouplingCondition:
    """Second-order binding criterion  int A^2 + (g^2/8pi) int int B ln B  < 0.

    ``binds`` requires lhs below ``-rel_floor * int A^2``, so quadrature noise
    around the exact cancellation at g = 2 is not reported as binding.
    """
    if abs(fld.flux) > 1e-8:
        raise DomainError("weak_coupling_condition requires zero total flux")
    A2 = 2.0 * math.pi * _A_squared_moment(fld)
    P = log_pairing(fld)
    lhs = A2 + g * g / (8.0 * math.pi) * P
    return WeakCouplingCondition(lhs=lhs, binds=bool(lhs < -rel_floor * A2), A_squared=A2,
                                 pairing=P, relative_lhs=lhs / A2)


def weak_coupling_energy(lam: float, g: float, field, spin: int | None = None) -> float:
    """Asymptotic weak-coupling energy -exp{-[(lam^2/8)(g^2-4) int A^2 r dr]^-1}.

    ``field`` is taken at unit strength.  The result does not depend on spin.
    """
    I = _A_squared_moment(field)
    arg = lam * lam / 8.0 * (g * g - 4.0) * I
    if not arg > 0:
        raise DomainError("weak coupling energy needs g > 2 and a non-trivial field")
    return -math.exp(-1.0 / arg)


def weak_coupling_log_slope(g: float, field) -> float:
    """d ln|eps| / d(lam^-2) predicted by the weak-coupling law."""
    return -8.0 / ((g * g - 4.0) * _A_squared_moment(field))


@dataclass(frozen=True)
class ShallowState:
    energy: float | None
    log_abs_energy: float | None
    r_max: float
    shift: float  # |ln|E|| change over the final r_max extension
    converged: bool
    refined_energy: float | None = None  # same window, doubled resolution


def shallow_ground_state(problem: RadialProblem, core: float = 0.02, n: int = 3000,
                         start: float = 1e3, limit: float = 1e40, decay_lengths: float = 40.0,
                         log_tol: float = 1e-3) -> ShallowState:
    """Lowest eigenvalue of a weakly bound channel, however shallow.

    The window grows until it holds ``decay_lengths`` decay lengths
    1/sqrt|E| of the state; the sinh grid keeps the resolution near the
    origin fixed, so energies far below 1e-20 stay resolvable.
    """
    r_max = start
    prev = None
    ev = None
    while r_max <= limit:
        disc = Discretization.for_scales(core=core, extent=r_max, n=n)
        ev = lowest_eigenvalue(problem, disc)
        if ev is None:
            r_max *= 100.0
            continue
        need = decay_lengths / math.sqrt(-ev)
        if need <= r_max:
            if prev is not None and abs(math.log(-ev) - math.log(-prev)) <= log_tol:
                fine = lowest_eigenvalue(problem, disc.refined())
                return ShallowState(ev, math.log(-ev), r_max, abs(math.log(-ev) - math.log(-prev)), True, fine)
            prev = ev
            r_max *= 4.0
        else:
            prev = ev
            r_max = max(need, 4.0 * r_max)
    return ShallowState(ev, None if ev is None else math.log(-ev), r_max / 4.0, math.inf, False)


def fit_log_energy(lams, log_abs_energies):
    """Least-squares fit ln|E| = a lam^-2 + b lam^-1 + c.

    The lam^-1 term absorbs the third-order (spin-odd) correction to the
    exponent, so ``a`` estimates the weak-coupling slope.
    """
    lam = np.asarray(lams, dtype=float)
    y = np.asarray(log_abs_energies, dtype=float)
    if len(lam) < 4:
        raise DomainError("need at least four couplings for the three-term fit")
    X = np.column_stack([lam**-2, lam**-1, np.ones_like(lam)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, float(np.sqrt(np.mean(resid**2)))


def strong_coupling_limit(mu: float, g: float, n: int = 0, ell: int = 0) -> float:
    """Eigenvalue nu_{n,l} = mu (4n + 2(|l| + l) + 2 - g) of the limiting oscillator."""
    if not mu > 0 or n < 0:
        raise DomainError("strong_coupling_limit needs mu > 0 and n >= 0")
    return mu * (4 * n + 2 * (abs(ell) + ell) + 2 - g)


@dataclass(frozen=True)
class RescaledGroundState:
    value: float | None  # lowest eigenvalue / lam, None when nothing binds
    eigenvalue: float | None
    target: float  # nu_{0,l}
    bound: bool


def strong_coupling_discretization(lam: float, mu: float, n: int = 1600) -> Discretization:
    length = 1.0 / math.sqrt(lam * mu)
    return Discretization.for_scales(core=length / 60.0, extent=max(60.0 * length, 1.0), n=n)


def rescaled_ground_state(lam: float, g: float, ell: int, current: CurrentProfile,
                          disc: Discretization | None = None, spin: int = -1) -> RescaledGroundState:
    """Lowest eigenvalue of H_l(lam) divided by lam."""
    if not lam > 0:
        raise DomainError("lam must be positive")
    mu = current_moments(current).mu
    if disc is None:
        disc = strong_coupling_discretization(lam, mu)
    problem = vortex_problem(current, lam, ell, g, spin)
    ev = lowest_eigenvalue(problem, disc)
    target = strong_coupling_limit(mu, g, 0, ell)
    if ev is None:
        return RescaledGroundState(None, None, target, False)
    return RescaledGroundState(ev / lam, ev, target, True)


def ladder_problem(mu: float, ell: int = 0) -> RadialProblem:
    """-Laplacian + mu^2 u^2 in channel l: levels 2 mu (2n + |l| + 1)."""
    return RadialProblem(ell=ell, spin=-1, g=0.0, potential=lambda u: mu * mu * u * u + ell * ell / (u * u))


def oscillator_problem(mu: float, g: float, ell: int = 0) -> RadialProblem:
    """The limiting operator -Laplacian + mu^2 u^2 + l^2/u^2 + mu(2l - g)."""
    return RadialProblem(ell=ell, spin=-1, g=g,
                         potential=lambda u: mu * mu * u * u + ell * ell / (u * u) + mu * (2 * ell - g))


@dataclass(frozen=True)
class TailFit:
    power: float  # fitted exponent of V - l^2/r^2
    coefficient: float  # limit of (V - l^2/r^2) r^3
    candidates: dict  # closed-form coefficients for comparison


def fit_potential_tail(current: CurrentProfile, lam: float, ell: int, g: float, spin: int,
                       r_range: tuple[float, float] = (1e3, 1e4), points: int = 40) -> TailFit:
    """Fit the r^-3 tail of V_l beyond the centrifugal term.

    ``candidates`` lists lam*m*(2l - s g)/2 and lam*(m/pi)*(4l - s g)/2 (s the
    spin sign) so the report can show which prefactor the data follow.
    """
    r = np.geomspace(*r_range, points)
    V = effective_potential(vortex_problem(current, lam, ell, g, spin), r) - ell * ell / r**2
    power = float(np.polyfit(np.log(r), np.log(np.abs(V)), 1)[0])
    # extrapolate (V r^3) linearly in 1/r to remove the next order
    coef = float(np.polyfit(1.0 / r, V * r**3, 1)[1])
    m = current_moments(current).m
    cands = {
        "lam_m_(2l-sg)/2": lam * m * (2 * ell - spin * g) / 2.0,
        "lam_(m/pi)_(4l-sg)/2": lam * (m / math.pi) * (4 * ell - spin * g) / 2.0,
    }
    return TailFit(power, coef, cands)
