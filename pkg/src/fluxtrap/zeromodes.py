"""Zero modes, the binding condition and variational bound-state certificates.

For a field of flux F = N + eps the functions chi_j = exp(-phi) (x1 + i x2)^j,
j = 0..N, solve D chi_j = 0.  The integrals

    I_j = int B exp(-2 phi) r^(2j) d^2x

decide whether chi_j can be turned into a trial state of negative energy for
g > 2.  ``certify`` searches the family  psi = f(r/R) chi_j + eps h  with a
cutoff ``f`` (only needed for the non-normalizable j = N) and a bump ``h``
inside the field support, and returns a certificate with the expanded
quadratic form when it finds a negative value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError
from .fields import FluxDecomposition, total_flux
from .specfun import QuadratureSpec, integrate

_BUMP_RADIAL_NODES = 48
_BUMP_ANGLES = 96


def _decomposition(fld) -> FluxDecomposition:
    dec = total_flux(fld)
    if not dec.F > 0:
        raise DomainError(f"zero modes need positive flux, got F = {dec.F}")
    return dec


def _check_index(fld, j: int) -> FluxDecomposition:
    dec = _decomposition(fld)
    if j < 0 or j > dec.N:
        raise DomainError(f"j = {j} outside 0..N = {dec.N}")
    return dec


def zero_mode(fld, j: int, x):
    """chi_j(x) = exp(-phi(x)) (x1 + i x2)^j at planar points ``x`` (shape (..., 2))."""
    _check_index(fld, j)
    x = np.asarray(x, dtype=float)
    z = x[..., 0] + 1j * x[..., 1]
    return np.exp(-fld.phi_xy(x[..., 0], x[..., 1])) * z**j


# --------------------------------------------------------------------------
# binding integrals


def _breakpoints(fld):
    return list(getattr(fld, "radii", [])[:-1]) if hasattr(fld, "radii") else list(getattr(fld, "_breakpoints", []))


def _radial_integral(fld, j: int, absolute: bool = False) -> float:
    R = fld.support_radius
    pts = [p for p in _breakpoints(fld) if 0 < p < R]
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000)

    def f(r):
        b = fld.B(r)
        if absolute:
            b = np.abs(b)
        return b * np.exp(-2.0 * fld.phi(r)) * r ** (2 * j + 1)

    # split at breakpoints so that jumps of B fall on panel edges
    edges = [0.0] + pts + [R]
    return 2.0 * math.pi * sum(integrate(f, a, b, spec) for a, b in zip(edges[:-1], edges[1:]))


@lru_cache(maxsize=8)
def _polar_rule(nr: int, nt: int):
    x, w = np.polynomial.legendre.leggauss(nr)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * w
    th = 2.0 * np.pi * np.arange(nt) / nt
    return t, wt, th


def _disk_points(center, radius: float, nr: int, nt: int, breaks=()):
    """Polar product rule on a disk: points (X, Y), weights, radial coordinate rho."""
    t, wt, th = _polar_rule(nr, nt)
    edges = [0.0] + sorted(b for b in breaks if 0 < b < radius) + [radius]
    rho, wr = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rho.append(a + (b - a) * t)
        wr.append((b - a) * wt)
    rho = np.concatenate(rho)
    wr = np.concatenate(wr)
    X = center[0] + rho[:, None] * np.cos(th)[None, :]
    Y = center[1] + rho[:, None] * np.sin(th)[None, :]
    W = (wr * rho)[:, None] * np.full(len(th), 2.0 * np.pi / len(th))[None, :]
    return X, Y, W, rho


def _planar_integral(fld, j: int, absolute: bool = False, nr: int = 64, nt: int = 128) -> float:
    """I_j by two-dimensional quadrature over the field support."""
    if fld.kind == "planar_grid":
        sub = 4
        off = (np.arange(sub) + 0.5) / sub - 0.5
        xs, ys, bs = fld._src
        X = (xs[:, None, None] + fld.h * off[None, :, None]).repeat(sub, axis=2)
        Y = (ys[:, None, None] + fld.h * off[None, None, :]).repeat(sub, axis=1)
        w = np.exp(-2.0 * fld.phi_xy(X, Y)) * (X * X + Y * Y) ** j
        b = np.abs(bs) if absolute else bs
        return float((b * w.mean(axis=(1, 2))).sum() * fld.h**2)
    if hasattr(fld, "parts"):
        total = 0.0
        for part, c in zip(fld.parts, fld.centers):
            X, Y, W, rho = _disk_points(c, part.support_radius, nr, nt, _breakpoints(part))
            b = part.B(rho)[:, None]
            if absolute:
                b = np.abs(b)
            total += float((b * np.exp(-2.0 * fld.phi_xy(X, Y)) * (X * X + Y * Y) ** j * W).sum())
        return total
    X, Y, W, rho = _disk_points((0.0, 0.0), fld.support_radius, nr, nt, _breakpoints(fld))
    b = fld.B_xy(X, Y)
    if absolute:
        b = np.abs(b)
    return float((b * np.exp(-2.0 * fld.phi_xy(X, Y)) * (X * X + Y * Y) ** j * W).sum())


def binding_integral(fld, j: int, method: str = "auto") -> float:
    """I_j = int B exp(-2 phi) r^(2j) d^2x.

    ``method="radial"`` uses the one-dimensional reduction (radial fields
    only), ``"planar"`` a two-dimensional product rule; ``"auto"`` picks the
    radial route whenever it applies.
    """
    _check_index(fld, j)
    radial = getattr(fld, "is_radial", False) and math.isfinite(fld.support_radius)
    if method == "auto":
        method = "radial" if radial else "planar"
    if method == "radial":
        if not radial:
            raise DomainError("radial reduction needs a compactly supported radial field")
        return _radial_integral(fld, j)
    if method == "planar":
        return _planar_integral(fld, j)
    raise DomainError(f"unknown method {method!r}")


def _integral_scale(fld, j: int) -> float:
    radial = getattr(fld, "is_radial", False) and math.isfinite(fld.support_radius)
    return _radial_integral(fld, j, absolute=True) if radial else _planar_integral(fld, j, absolute=True)


# I_j counts as non-negative down to this fraction of int |B| exp(-2 phi) r^(2j)
ZERO_TOLERANCE = 1e-10


@dataclass(frozen=True)
class GuaranteedCount:
    n_B: int
    flags: tuple
    integrals: tuple
    N: int
    eps: float
    F: float


def guaranteed_count(fld) -> GuaranteedCount:
    """n_B = #{j in 0..N : I_j >= 0}."""
    dec = _decomposition(fld)
    flags, vals = [], []
    for j in range(dec.N + 1):
        I = binding_integral(fld, j)
        scale = _integral_scale(fld, j)
        flags.append(bool(I >= -ZERO_TOLERANCE * scale))
        vals.append(I)
    return GuaranteedCount(sum(flags), tuple(flags), tuple(vals), dec.N, dec.eps, dec.F)


def gradient_form(fld, j: int) -> float:
    """2 int |grad(phi - j ln r)|^2 exp(-2 phi) r^(2j) d^2x for a radial field.

    Integrating B = Laplacian(phi) by parts against exp(-2 phi) r^(2j) gives
    I_j exactly this value whenever j <= N (the boundary terms at 0 and at
    infinity vanish), so I_j > 0 for every non-trivial field of positive flux,
    whatever the sign pattern of B.
    """
    _check_index(fld, j)
    if not (getattr(fld, "is_radial", False) and math.isfinite(fld.support_radius)):
        raise DomainError("gradient_form needs a compactly supported radial field")
    R = fld.support_radius
    edges = [0.0] + [p for p in _breakpoints(fld) if 0 < p < R] + [R]
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000)

    def f(r):
        with np.errstate(divide="ignore", invalid="ignore"):
            d = fld.A(r) - j / np.where(r > 0, r, 1.0)
            v = np.exp(-2.0 * fld.phi(r)) * r ** (2 * j + 1) * d * d
        return np.where(r > 0, v, 0.0)

    inside = sum(integrate(f, a, b, spec) for a, b in zip(edges[:-1], edges[1:]))
    # outside the support: phi = F ln r, A = F / r
    F = fld.flux
    outside = (F - j) ** 2 * R ** (2 * j - 2 * F) / (2 * (F - j))
    return 4.0 * math.pi * (inside + outside)


@dataclass(frozen=True)
class BalanceSearch:
    core_values: tuple
    ratios: tuple  # I_j / int |B| exp(-2 phi) r^(2j) for each core value
    min_ratio: float
    best_core: float
    sign_change: bool


def search_balanced_annulus(r_inner: float, r_outer: float, b_outer: float, core_values, j: int = 0) -> BalanceSearch:
    """Scan annuli (core field b, ring field b_outer) for a zero of I_j.

    ``sign_change`` reports whether I_j changes sign along the scan; when it
    does, the zero can be root-found between the neighbouring samples.
    """
    from .fields import annulus

    cores, ratios = [], []
    for b in core_values:
        fld = annulus(float(b), r_inner, b_outer, r_outer)
        dec = total_flux(fld)
        if not dec.F > 0 or j > dec.N:
            continue
        cores.append(float(b))
        ratios.append(binding_integral(fld, j) / _integral_scale(fld, j))
    if not cores:
        raise DomainError("no annulus in the scan has positive flux with N >= j")
    r = np.array(ratios)
    k = int(np.argmin(np.abs(r)))
    return BalanceSearch(tuple(cores), tuple(ratios), float(abs(r[k])), cores[k],
                         bool(np.any(r > 0) and np.any(r < 0)))


# --------------------------------------------------------------------------
# trial functions


def cutoff(u):
    """C^1 cubic ramp: 1 for u <= 1, 0 for u >= 2."""
    t = np.clip(np.asarray(u, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - t * t * (3.0 - 2.0 * t)


def cutoff_derivative(u):
    u = np.asarray(u, dtype=float)
    t = u - 1.0
    return np.where((t > 0) & (t < 1), -6.0 * t * (1.0 - t), 0.0)


@dataclass(frozen=True)
class Bump:
    """h(x) = exp(-1 / (1 - rho^2)), rho = |x - center| / width, zero for rho >= 1."""

    center: tuple
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigurationError("bump width must be positive")

    def values(self, X, Y):
        rho = np.hypot(X - self.center[0], Y - self.center[1]) / self.width
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(rho < 1, np.exp(-1.0 / (1.0 - np.minimum(rho, 1.0) ** 2)), 0.0)


@dataclass(frozen=True)
class TrialFunction:
    """psi = f(r/R) chi_j + eps_trial * h.  ``R=None`` means f = 1."""

    j: int
    R: float | None = None
    eps_trial: float = 0.0
    bump: Bump | None = None


@dataclass
class BindingCertificate:
    j: int
    form_value: float
    R: float | None
    eps_trial: float
    bump: Bump | None
    breakdown: dict
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "j": self.j,
            "form_value": self.form_value,
            "R": self.R,
            "eps_trial": self.eps_trial,
            "bump": None if self.bump is None else {"center": list(self.bump.center), "width": self.bump.width},
            "breakdown": dict(self.breakdown),
            "warnings": list(self.warnings),
        }


@dataclass
class CertificationFailure:
    j: int
    reason: str  # "condition_violated" | "no_bump_couples" | "search_exhausted"
    best_value: float
    best_trial: TrialFunction | None
    binding_integral: float
    message: str = ""

    def as_dict(self) -> dict:
        t = self.best_trial
        return {
            "j": self.j,
            "reason": self.reason,
            "best_value": self.best_value,
            "binding_integral": self.binding_integral,
            "best_trial": None if t is None else {"R": t.R, "eps_trial": t.eps_trial},
            "message": self.message,
        }


def _cutoff_term(fld, dec: FluxDecomposition, j: int, R: float) -> float:
    """R^-2 int |f'(r/R)|^2 |chi_j|^2 d^2x over the annulus R < r < 2R."""
    if getattr(fld, "is_radial", False):
        # outside the support phi = F ln r exactly
        p = 2 * j - 2 * dec.F + 1
        spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-13)
        core = integrate(lambda u: cutoff_derivative(u) ** 2 * u**p, 1.0, 2.0, spec)
        return 2.0 * math.pi * R ** (2 * j - 2 * dec.F) * core
    x, w = np.polynomial.legendre.leggauss(48)
    u = 1.5 + 0.5 * x
    wu = 0.5 * w
    nt = 128
    th = 2.0 * np.pi * np.arange(nt) / nt
    r = R * u
    X = r[:, None] * np.cos(th)[None, :]
    Y = r[:, None] * np.sin(th)[None, :]
    chi2 = np.exp(-2.0 * fld.phi_xy(X, Y)) * (r**(2 * j))[:, None]
    W = (wu * R * r)[:, None] * (2.0 * np.pi / nt)
    return float((cutoff_derivative(u)[:, None] ** 2 * chi2 * W).sum() / R**2)


@dataclass(frozen=True)
class _BumpIntegrals:
    kinetic: float  # int |D h|^2 = int |grad h + h grad phi|^2
    coupling: float  # Re int h B chi_j
    zeeman: float  # int B h^2


def _bump_integrals(fld, j: int, bump: Bump) -> _BumpIntegrals:
    X, Y, W, rho = _disk_points(bump.center, bump.width, _BUMP_RADIAL_NODES, _BUMP_ANGLES)
    t = rho / bump.width
    h = np.exp(-1.0 / (1.0 - t * t))[:, None] * np.ones_like(X)
    dh = (h * (-2.0 * t / (1.0 - t * t) ** 2)[:, None]) / bump.width
    ex = (X - bump.center[0]) / np.where(rho > 0, rho, 1.0)[:, None]
    ey = (Y - bump.center[1]) / np.where(rho > 0, rho, 1.0)[:, None]
    g1, g2 = fld.grad_phi_xy(X, Y)
    kin = (dh * ex + h * g1) ** 2 + (dh * ey + h * g2) ** 2
    B = fld.B_xy(X, Y)
    phi = fld.phi_xy(X, Y)
    chi_re = np.real(np.exp(-phi) * (X + 1j * Y) ** j)
    return _BumpIntegrals(
        kinetic=float((kin * W).sum()),
        coupling=float((h * B * chi_re * W).sum()),
        zeeman=float((B * h * h * W).sum()),
    )


def _support_ok(fld, bump: Bump) -> bool:
    R = fld.support_radius
    return math.hypot(*bump.center) + bump.width <= R * (1 + 1e-12)


def _validate_trial(fld, dec: FluxDecomposition, trial: TrialFunction):
    if trial.j < 0 or trial.j > dec.N:
        raise DomainError(f"j = {trial.j} outside 0..N = {dec.N}")
    if trial.R is not None and trial.j <= dec.N - 1:
        raise ConfigurationError("chi_j is square integrable for j <= N-1: use f = 1 (R=None)")
    if trial.R is None and trial.j == dec.N:
        raise ConfigurationError("the resonance j = N needs a cutoff radius R")
    if trial.R is not None and not trial.R > fld.support_radius:
        raise ConfigurationError("cutoff radius must exceed the support radius")
    if trial.eps_trial != 0.0 and trial.bump is None:
        raise ConfigurationError("eps_trial != 0 needs a bump")
    if trial.bump is not None and not _support_ok(fld, trial.bump):
        raise ConfigurationError("bump must lie inside the field support")


def variational_form(fld, g: float, trial: TrialFunction, _cache: dict | None = None) -> BindingCertificate:
    """Expanded quadratic form (psi, H psi) for the trial state.

    Breakdown: ``cutoff_kinetic`` R^-2 int |f' chi_j|^2, ``bump_kinetic``
    eps^2 int |D h|^2, ``cross`` -(g-2) eps Re int h B chi_j and ``zeeman``
    -(g-2)/2 (I_j + eps^2 int B h^2).
    """
    dec = _decomposition(fld)
    _validate_trial(fld, dec, trial)
    j, eps = trial.j, trial.eps_trial
    cache = _cache if _cache is not None else {}
    if ("I", j) not in cache:
        cache[("I", j)] = binding_integral(fld, j)
    I = cache[("I", j)]
    T1 = 0.0 if trial.R is None else _cutoff_term(fld, dec, j, trial.R)
    if trial.bump is not None:
        key = ("bump", j, trial.bump)
        if key not in cache:
            cache[key] = _bump_integrals(fld, j, trial.bump)
        bi = cache[key]
    else:
        bi = _BumpIntegrals(0.0, 0.0, 0.0)
    breakdown = {
        "cutoff_kinetic": T1,
        "bump_kinetic": eps * eps * bi.kinetic,
        "cross": -(g - 2.0) * eps * bi.coupling,
        "zeeman": -0.5 * (g - 2.0) * (I + eps * eps * bi.zeeman),
    }
    value = math.fsum(breakdown.values())
    return BindingCertificate(j, value, trial.R, eps, trial.bump, breakdown)


# --------------------------------------------------------------------------
# certificate search


@dataclass(frozen=True)
class CertifySearch:
    eps_decades: tuple = (-3.0, 0.0)
    eps_per_decade: int = 2
    R_exponents: tuple = (1, 6)  # R = support_radius * 2^k
    R_extension: int = 40  # last exponent tried for the resonance j = N
    widths: tuple = (1.0, 0.5, 0.25)
    n_centers: int = 3

    def eps_grid(self):
        lo, hi = self.eps_decades
        k = int(round((hi - lo) * self.eps_per_decade))
        mags = 10.0 ** np.linspace(lo, hi, k + 1)
        out = [0.0]
        for m in mags:
            out.extend([float(m), -float(m)])
        return out


def _bump_centres(fld, j: int, count: int):
    """Points where |B chi_j| is largest, kept inside 80% of the support."""
    R = fld.support_radius
    if getattr(fld, "is_radial", False):
        r = np.linspace(0.0, 0.8 * R, 161)
        X, Y = r, np.zeros_like(r)
    else:
        s = np.linspace(-0.8 * R, 0.8 * R, 81)
        X, Y = np.meshgrid(s, s)
        keep = np.hypot(X, Y) <= 0.8 * R
        X, Y = X[keep], Y[keep]
    score = np.abs(fld.B_xy(X, Y) * np.exp(-fld.phi_xy(X, Y))) * np.hypot(X, Y) ** j
    order = np.argsort(-score, kind="stable")
    chosen = []
    sep = 0.2 * R
    for k in order:
        p = (float(X[k]), float(Y[k]))
        if score[k] <= 0:
            break
        if all(math.hypot(p[0] - q[0], p[1] - q[1]) >= sep for q in chosen):
            chosen.append(p)
        if len(chosen) == count:
            break
    return chosen


def bump_dictionary(fld, j: int, search: CertifySearch = CertifySearch()):
    R = fld.support_radius
    out = []
    for c in _bump_centres(fld, j, search.n_centers):
        room = R - math.hypot(*c)
        for w in search.widths:
            out.append(Bump(c, w * room))
    return out


def certify(fld, g: float, j: int, search: CertifySearch = CertifySearch()):
    """Search trial states for a negative value of the quadratic form.

    Returns a BindingCertificate, or a CertificationFailure whose ``reason``
    distinguishes a violated condition (I_j < 0), bumps that do not couple to
    chi_j, and an exhausted search.  The grid order is fixed, so the result is
    deterministic: R ascending, then bumps, then eps (0 first).
    """
    dec = _check_index(fld, j)
    cache: dict = {}
    I = binding_integral(fld, j)
    cache[("I", j)] = I
    scale = _integral_scale(fld, j)
    if I < -ZERO_TOLERANCE * scale:
        return CertificationFailure(j, "condition_violated", math.nan, None, I,
                                    "I_j < 0: the binding condition does not hold")
    bumps = bump_dictionary(fld, j, search)
    bint = {b: _bump_integrals(fld, j, b) for b in bumps}
    for b, v in bint.items():
        cache[("bump", j, b)] = v
    eps_grid = search.eps_grid()
    resonance = j == dec.N
    if resonance:
        k0, k1 = search.R_exponents
        Rs = [fld.support_radius * 2.0**k for k in range(k0, search.R_extension + 1)]
        n_regular = k1 - k0 + 1
    else:
        Rs = [None]
        n_regular = 1
    gm = g - 2.0
    best = (math.inf, None)
    for iR, R in enumerate(Rs):
        T1 = 0.0 if R is None else _cutoff_term(fld, dec, j, R)
        candidates = [(None, 0.0)] + [(b, e) for b in bumps for e in eps_grid if e != 0.0]
        for b, e in candidates:
            bi = bint[b] if b is not None else _BumpIntegrals(0.0, 0.0, 0.0)
            val = T1 + e * e * bi.kinetic - gm * e * bi.coupling - 0.5 * gm * (I + e * e * bi.zeeman)
            if val < best[0]:
                best = (val, TrialFunction(j, R, e, b))
            if val < 0:
                cert = variational_form(fld, g, TrialFunction(j, R, e, b), cache)
                if cert.form_value < 0:
                    if iR >= n_regular:
                        cert.warnings.append(
                            f"resonance case: negative value only at R = {R:.6g} "
                            f"(beyond support_radius * 2^{search.R_exponents[1]})")
                    return cert
    if abs(I) <= ZERO_TOLERANCE * scale and all(abs(v.coupling) <= 1e-12 * max(v.kinetic, 1e-300)
                                                 for v in bint.values()):
        return CertificationFailure(j, "no_bump_couples", best[0], best[1], I,
                                    "I_j = 0 and no dictionary bump couples to chi_j")
    return CertificationFailure(j, "search_exhausted", best[0], best[1], I,
                                "no negative value on the search grid")
