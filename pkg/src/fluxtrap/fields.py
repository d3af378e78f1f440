"""Magnetic field and current profiles, flux, the Aharonov-Casher potential and gauges.

Units: 2m = hbar = c = e = 1.  Fluxes are reported in units of 2*pi, i.e.
``F = (1/2pi) * integral(B d^2x)``.  For a rotationally symmetric field the
angular component of the vector potential is ``A(r) = (1/r) int_0^r B(s) s ds``
and the Aharonov-Casher potential is ``phi(r) = int_0^inf B(s) ln(max(r, s)) s ds``.

Every field exposes the same planar surface (``B_xy``, ``A_xy``, ``phi_xy``,
``support_radius``, ``flux``) so the zero-mode and planar modules can treat
radial, composite and gridded fields alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import ConvergenceError, DomainError
from .specfun import (
    QuadratureSpec,
    elliptic_E,
    elliptic_K,
    elliptic_KE_complementary,
    graded_rule,
    integrate,
)

# The elliptic-integral formula with prefactor 4 is the Gaussian Biot-Savart
# potential, whose slope at the origin is pi * mu.  Dividing by pi makes
# A(r) = lambda*mu*r + O(r^2) hold with mu = int J(r')/r' dr', i.e. lambda
# absorbs the Biot-Savart constant.
VORTEX_PREFACTOR = 4.0 / math.pi

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# --------------------------------------------------------------------------
# flux decomposition


@dataclass(frozen=True)
class FluxDecomposition:
    F: float
    N: int
    eps: float


def decompose_flux(F: float, snap: float = 1e-10) -> FluxDecomposition:
    """Split ``F = N + eps`` with ``eps`` in (0, 1]."""
    nearest = round(F)
    if abs(F - nearest) <= snap * max(1.0, abs(F)):
        F = float(nearest)
    N = math.ceil(F) - 1
    return FluxDecomposition(F=float(F), N=int(N), eps=float(F - N))


def total_flux(field) -> FluxDecomposition:
    return decompose_flux(field.flux)


def ac_potential_phi(field, x) -> float:
    """phi(x) = (1/2pi) int B(y) ln|x - y| d^2y at a planar point ``x``."""
    x = np.asarray(x, dtype=float)
    return field.phi_xy(x[..., 0], x[..., 1])


def gauge_from_phi(field, x, step: float | None = None):
    """(A1, A2) = (-d2 phi, d1 phi) by central differences of ``field.phi_xy``."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    if step is None:
        step = 1e-5 * max(1.0, float(getattr(field, "support_radius", 1.0) or 1.0))
        if getattr(field, "grid_spacing", None):
            step = min(step, 1e-3 * field.grid_spacing)
    d1 = (field.phi_xy(x1 + step, x2) - field.phi_xy(x1 - step, x2)) / (2 * step)
    d2 = (field.phi_xy(x1, x2 + step) - field.phi_xy(x1, x2 - step)) / (2 * step)
    return -d2, d1


def radial_vector_potential(field, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("radial_vector_potential needs r > 0")
    return field.A(r_arr)


# --------------------------------------------------------------------------
# radial fields


class RadialField:
    """A rotationally symmetric field ``B(r)`` vanishing for r > support_radius.

    The enclosed flux and the logarithmic moment are tabulated once on Gauss
    panels (split at ``breakpoints``), so ``A``, ``phi`` and friends are cheap
    vectorized evaluations accurate to near machine precision.
    """

    kind = "radial_closed_form"
    is_radial = True
    grid_spacing = None

    def __init__(self, B: Callable, support_radius: float, breakpoints: Sequence[float] = (),
                 name: str = "radial", panels: int = 64):
        if not support_radius > 0:
            raise DomainError("support_radius must be positive")
        self._B = B
        self.support_radius = float(support_radius)
        self.name = name
        self._breakpoints = sorted(float(b) for b in breakpoints if 0 < b < support_radius)
        self._panels = panels
        self._table = None

    # -- profile
    def B(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self.support_radius
        val = np.asarray(self._B(np.where(inside, r, 0.0)), dtype=float)
        return np.where(inside, val, 0.0)

    # -- tabulated cumulative integrals
    def _build_table(self):
        R = self.support_radius
        seg = [0.0] + self._breakpoints + [R]
        edges = []
        for a, b in zip(seg[:-1], seg[1:]):
            n = max(2, int(math.ceil(self._panels * (b - a) / R)))
            edges.extend(np.linspace(a, b, n + 1)[:-1])
        edges.append(R)
        first = edges[1]
        graded = [first * 0.5**k for k in range(1, 40)][::-1]
        edges = np.array([0.0] + graded + edges[1:])
        a, b = edges[:-1], edges[1:]
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        s = c[:, None] + h[:, None] * _GL_X[None, :]
        w = h[:, None] * _GL_W[None, :]
        Bs = self.B(s) * s
        c0 = np.concatenate([[0.0], np.cumsum((w * Bs).sum(axis=1))])
        c1 = np.concatenate([[0.0], np.cumsum((w * Bs * np.log(s)).sum(axis=1))])
        self._table = (edges, c0, c1)

    def _cumulative(self, r):
        if self._table is None:
            self._build_table()
        edges, c0, c1 = self._table
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.support_radius)
        k = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(edges) - 2)
        e = edges[k]
        c, h = 0.5 * (e + r), 0.5 * (r - e)
        s = c[..., None] + h[..., None] * _GL_X
        w = h[..., None] * _GL_W
        Bs = self.B(s) * s
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(s > 0, np.log(np.where(s > 0, s, 1.0)), 0.0)
        p0 = (w * Bs).sum(axis=-1)
        p1 = (w * Bs * logs).sum(axis=-1)
        return c0[k] + p0, c1[k] + p1

    def enclosed_flux(self, r):
        """int_0^r B(s) s ds (flux through the disk of radius r, in units of 2pi)."""
        return self._cumulative(r)[0]

    def log_moment(self, r):
        """int_0^r B(s) s ln(s) ds."""
        return self._cumulative(r)[1]

    @property
    def flux(self) -> float:
        return float(self.enclosed_flux(self.support_radius))

    def A(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, self.enclosed_flux(r) / np.where(r > 0, r, 1.0), 0.0)

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        inner, mom = self._cumulative(r)
        total_mom = float(self.log_moment(self.support_radius))
        with np.errstate(divide="ignore", invalid="ignore"):
            lnr = np.log(np.where(r > 0, r, 1.0))
        inside = np.where(r > 0, lnr * inner, 0.0) + (total_mom - mom)
        return np.where(r < self.support_radius, inside, self.flux * lnr)

    # -- planar surface
    def B_xy(self, x, y):
        return self.B(np.hypot(x, y))

    def A_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            a_over_r = np.where(r > 0, self.A(r) / np.where(r > 0, r, 1.0), 0.0)
        return -y * a_over_r, x * a_over_r

    def phi_xy(self, x, y):
        return self.phi(np.hypot(x, y))

    def grad_phi_xy(self, x, y):
        A1, A2 = self.A_xy(x, y)
        return A2, -A1

    def describe(self) -> dict:
        return {"profile": self.name, "kind": self.kind, "support_radius": self.support_radius}


class PiecewiseConstantRadial(RadialField):
    """B = values[k] on radii[k-1] <= r < radii[k]; closed forms throughout."""

    def __init__(self, radii: Sequence[float], values: Sequence[float], name: str = "piecewise"):
        radii = [float(r) for r in radii]
        if len(radii) != len(values) or any(b <= a for a, b in zip([0.0] + radii[:-1], radii)):
            raise DomainError("radii must be increasing and match values")
        self.radii = np.array(radii)
        self.values = np.array(values, dtype=float)
        super().__init__(self._profile, radii[-1], breakpoints=radii[:-1], name=name)

    def _profile(self, r):
        idx = np.searchsorted(self.radii, r, side="right")
        vals = np.concatenate([self.values, [0.0]])
        return vals[np.minimum(idx, len(self.values))]

    def _cumulative(self, r):
        r = np.asarray(r, dtype=float)
        lo = np.concatenate([[0.0], self.radii[:-1]])
        c0 = np.zeros_like(r)
        c1 = np.zeros_like(r)

        def G(s):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(s > 0, 0.5 * s * s * np.log(np.where(s > 0, s, 1.0)) - 0.25 * s * s, 0.0)

        for b, r0, r1 in zip(self.values, lo, self.radii):
            u1 = np.clip(r, r0, r1)
            c0 = c0 + b * 0.5 * (u1 * u1 - r0 * r0)
            c1 = c1 + b * (G(u1) - G(np.full_like(r, r0)))
        return c0, c1


def uniform_disk(B0: float = 1.0, radius: float = 1.0) -> PiecewiseConstantRadial:
    return PiecewiseConstantRadial([radius], [B0], name="uniform_disk")


def annulus(b_inner: float, r_inner: float, b_outer: float, r_outer: float) -> PiecewiseConstantRadial:
    """Core of field ``b_inner`` surrounded by a ring of field ``b_outer``."""
    return PiecewiseConstantRadial([r_inner, r_outer], [b_inner, b_outer], name="annulus")


def gaussian_window(B0: float = 1.0, width: float = 1.0, cutoff: float = 6.0) -> RadialField:
    """B0 exp(-r^2 / 2w^2) truncated at ``cutoff * width``."""
    f = lambda r: B0 * np.exp(-0.5 * (r / width) ** 2)
    return RadialField(f, cutoff * width, name="gaussian_window")


def polynomial_bump(B0: float = 1.0, radius: float = 1.0) -> RadialField:
    """C^1 bump B0 (1 - r^2/R^2)^2 on r < R."""
    f = lambda r: B0 * (1.0 - (r / radius) ** 2) ** 2
    return RadialField(f, radius, name="polynomial_bump")


class SampledRadialField(RadialField):
    """Radial field from a sample table, interpolated with monotone cubic pieces."""

    kind = "radial_sampled"

    def __init__(self, r_samples, B_samples, name: str = "sampled"):
        r_samples = np.asarray(r_samples, dtype=float)
        B_samples = np.asarray(B_samples, dtype=float)
        if r_samples[0] != 0.0:
            r_samples = np.concatenate([[0.0], r_samples])
            B_samples = np.concatenate([[B_samples[0]], B_samples])
        self._interp = PchipInterpolator(r_samples, B_samples, extrapolate=False)
        super().__init__(lambda r: np.nan_to_num(self._interp(r)), float(r_samples[-1]),
                         breakpoints=r_samples[1:-1], name=name,
                         panels=max(64, len(r_samples)))


# --------------------------------------------------------------------------
# composite (non-radial) fields


class CompositeField:
    """Superposition of radial fields translated to ``centers``.

    phi and A are linear in B, so they are exact sums of the shifted radial
    solutions; the result has no rotational symmetry in general.
    """

    kind = "planar_composite"
    is_radial = False
    grid_spacing = None

    def __init__(self, parts: Sequence[RadialField], centers: Sequence[Sequence[float]],
                 name: str = "composite"):
        self.parts = list(parts)
        self.centers = [tuple(map(float, c)) for c in centers]
        self.name = name
        self.support_radius = max(math.hypot(*c) + p.support_radius
                                  for p, c in zip(self.parts, self.centers))

    @property
    def flux(self) -> float:
        return float(sum(p.flux for p in self.parts))

    def B_xy(self, x, y):
        return sum(p.B_xy(x - cx, y - cy) for p, (cx, cy) in zip(self.parts, self.centers))

    def A_xy(self, x, y):
        A1 = 0.0
        A2 = 0.0
        for p, (cx, cy) in zip(self.parts, self.centers):
            a1, a2 = p.A_xy(x - cx, y - cy)
            A1 = A1 + a1
            A2 = A2 + a2
        return A1, A2

    def grad_phi_xy(self, x, y):
        A1, A2 = self.A_xy(x, y)
        return A2, -A1

    def phi_xy(self, x, y):
        return sum(p.phi_xy(x - cx, y - cy) for p, (cx, cy) in zip(self.parts, self.centers))

    def describe(self) -> dict:
        return {"profile": self.name, "kind": self.kind, "support_radius": self.support_radius,
                "centers": self.centers}


def two_bumps(flux_each: float = 0.75, radius: float = 0.6, separation: float = 1.2) -> CompositeField:
    """Two off-centre polynomial bumps; total flux 2*flux_each."""
    # int_0^R (1 - s^2/R^2)^2 s ds = R^2 / 6
    B0 = 6.0 * flux_each / radius**2
    half = 0.5 * separation
    return CompositeField([polynomial_bump(B0, radius), polynomial_bump(B0, radius)],
                          [(-half, 0.3 * half), (half, -0.3 * half)], name="two_bumps")


# --------------------------------------------------------------------------
# gridded fields (piecewise constant on square cells)


def _rect_log_antiderivative(u, v):
    """Antiderivative of ln sqrt(u^2 + v^2) in both u and v."""
    with np.errstate(divide="ignore", invalid="ignore"):
        q = u * u + v * v
        t1 = np.where(q > 0, u * v * np.log(np.where(q > 0, q, 1.0)), 0.0)
        t2 = np.where(u != 0, u * u * np.arctan(v / np.where(u != 0, u, 1.0)), 0.0)
        t3 = np.where(v != 0, v * v * np.arctan(u / np.where(v != 0, v, 1.0)), 0.0)
    return 0.5 * (t1 - 3.0 * u * v + t2 + t3)


class GridField:
    """Field given as samples on square cells of side ``h``.

    Sample (i, j) is the cell centred at ``(x0 + i h, y0 + j h)``; B is
    constant on each cell and zero outside the grid.  phi is the exact
    logarithmic potential of that piecewise-constant field.
    """

    kind = "planar_grid"
    is_radial = False

    def __init__(self, values, x0: float, y0: float, h: float, name: str = "grid"):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DomainError("grid values must be a 2D array (ny, nx)")
        if not (h > 0 and values.size > 0 and np.all(np.isfinite(values))):
            raise DomainError("grid needs h > 0 and a non-empty array of finite samples")
        self.values = values
        self.ny, self.nx = values.shape
        self.x0, self.y0, self.h = float(x0), float(y0), float(h)
        self.grid_spacing = self.h
        self.name = name
        jj, ii = np.nonzero(values)
        xs = self.x0 + ii * h
        ys = self.y0 + jj * h
        self._src = (xs, ys, values[jj, ii])
        if len(xs):
            self.support_radius = float(np.max(np.hypot(np.abs(xs) + h / 2, np.abs(ys) + h / 2)))
        else:
            self.support_radius = 0.0

    @property
    def flux(self) -> float:
        return float(self.values.sum() * self.h**2 / (2 * np.pi))

    def B_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        i = np.floor((x - self.x0) / self.h + 0.5).astype(int)
        j = np.floor((y - self.y0) / self.h + 0.5).astype(int)
        ok = (i >= 0) & (i < self.nx) & (j >= 0) & (j < self.ny)
        out = np.zeros(np.broadcast(x, y).shape)
        out[ok] = self.values[j[ok], i[ok]]
        return out

    def phi_xy(self, x, y, chunk: int = 2048):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        flat_x, flat_y = x.ravel(), y.ravel()
        xs, ys, bs = self._src
        a = 0.5 * self.h
        out = np.empty(flat_x.shape)
        for start in range(0, len(flat_x), chunk):
            px = flat_x[start:start + chunk, None]
            py = flat_y[start:start + chunk, None]
            u0, u1 = xs - a - px, xs + a - px
            v0, v1 = ys - a - py, ys + a - py
            cell = (_rect_log_antiderivative(u1, v1) - _rect_log_antiderivative(u0, v1)
                    - _rect_log_antiderivative(u1, v0) + _rect_log_antiderivative(u0, v0))
            out[start:start + chunk] = cell @ bs / (2 * np.pi)
        return out.reshape(x.shape)

    def A_xy(self, x, y):
        return gauge_from_phi(self, np.stack(np.broadcast_arrays(x, y), axis=-1))

    def grad_phi_xy(self, x, y):
        A1, A2 = self.A_xy(x, y)
        return A2, -A1

    def describe(self) -> dict:
        return {"profile": self.name, "kind": self.kind, "nx": self.nx, "ny": self.ny,
                "x0": self.x0, "y0": self.y0, "h": self.h}

    # plain-text format: header "nx ny x0 y0 h", then ny rows of nx values
    @classmethod
    def from_file(cls, path) -> "GridField":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 5:
                raise DomainError("grid header must be 'nx ny x0 y0 h'")
            try:
                nx, ny = int(header[0]), int(header[1])
                x0, y0, h = map(float, header[2:])
                data = np.array(fh.read().split(), dtype=float)
            except ValueError as exc:
                raise DomainError(f"malformed grid file: {exc}") from exc
        if data.size != nx * ny:
            raise DomainError(f"expected {nx * ny} samples, found {data.size}")
        return cls(data.reshape(ny, nx), x0, y0, h, name=str(path))

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.nx} {self.ny} {self.x0!r} {self.y0!r} {self.h!r}\n")
            for row in self.values:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def sample(cls, field, nx: int, ny: int, x0: float, y0: float, h: float, sub: int = 4):
        """Cell averages of ``field`` (sub x sub midpoint samples per cell)."""
        off = (np.arange(sub) + 0.5) / sub - 0.5
        xs = x0 + np.arange(nx) * h
        ys = y0 + np.arange(ny) * h
        X = xs[None, :, None, None] + h * off[None, None, None, :]
        Y = ys[:, None, None, None] + h * off[None, None, :, None]
        vals = field.B_xy(X, Y).mean(axis=(2, 3))
        return cls(vals, x0, y0, h, name=f"sampled:{getattr(field, 'name', 'field')}")


# --------------------------------------------------------------------------
# current vortices


@dataclass(frozen=True)
class CurrentProfile:
    """Azimuthal current density J(r) at unit strength.

    ``a`` is the Taylor coefficient J(r)/r^2 at the origin when known in
    closed form, ``decay_eps`` the exponent excess in J = O(r^(-3-eps)).
    """

    J: Callable
    a: float | None = None
    decay_eps: float = 1.0
    name: str = "current"

    def __call__(self, r):
        return self.J(r)

    def scaled(self, c: float) -> "CurrentProfile":
        J = self.J
        return CurrentProfile(lambda r: c * J(r), None if self.a is None else c * self.a,
                              self.decay_eps, f"{c}*{self.name}")


@lru_cache(maxsize=None)
def _exp_current(c):
    return lambda r: c * r * r * np.exp(-r)


def exponential_current(c: float = 1.0) -> CurrentProfile:
    """J(r) = c r^2 exp(-r): mu = c, m = 24 pi c, a = c."""
    return CurrentProfile(_exp_current(c), a=c, decay_eps=np.inf, name="r2exp")


@lru_cache(maxsize=None)
def _gauss_current(c, w):
    return lambda r: c * r * r * np.exp(-0.5 * (r / w) ** 2)


def gaussian_current(c: float = 1.0, width: float = 1.0) -> CurrentProfile:
    return CurrentProfile(_gauss_current(c, width), a=c, decay_eps=np.inf, name="r2gauss")


@dataclass(frozen=True)
class CurrentMoments:
    m: float
    mu: float
    a: float


def current_moments(current: CurrentProfile, spec: QuadratureSpec | None = None) -> CurrentMoments:
    spec = spec or QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=4000)
    J = current.J
    m = math.pi * integrate(lambda r: J(r) * r * r, 0.0, np.inf, spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = integrate(lambda r: np.where(r > 0, J(r) / np.where(r > 0, r, 1.0), 0.0),
                       0.0, np.inf, spec)
    if current.a is not None:
        a = float(current.a)
    else:
        d = 1e-5
        f1 = float(J(np.array(d))) / d**2
        f2 = float(J(np.array(2 * d))) / (2 * d) ** 2
        a = 2 * f1 - f2
    return CurrentMoments(m=float(m), mu=float(mu), a=a)


def _k_minus_e(s, sc):
    """K(s^2) - E(s^2) for s in (0, 1); ``sc = 1 - s`` supplied exactly."""
    s = np.asarray(s, dtype=float)
    m = s * s
    out = np.empty_like(s)
    small = m < 1e-3
    if np.any(small):
        ms = m[small]
        # (pi/2) sum_n c_n^2 2n/(2n-1) m^n with c_n = (2n)!/(4^n n!^2)
        acc = np.zeros_like(ms)
        cn = 1.0
        mn = np.ones_like(ms)
        for n in range(1, 9):
            cn *= (2 * n - 1) / (2 * n)
            mn = mn * ms
            acc += cn * cn * (2 * n) / (2 * n - 1) * mn
        out[small] = 0.5 * np.pi * acc
    big = ~small
    if np.any(big):
        mc = sc[big] * (1.0 + s[big])
        K, E = elliptic_KE_complementary(mc)
        out[big] = K - E
    return out


@lru_cache(maxsize=None)
def _vortex_rule():
    s, sc, w = graded_rule(order=20, ratio=0.5, depth=70, depth_one=44)
    return s, w * _k_minus_e(s, sc)


def vortex_potential_fast(J: Callable, r) -> np.ndarray:
    """Unit-strength vortex potential by a fixed graded rule (vectorized in r).

    With r' = r s (inner) and r' = r / s (outer) both pieces share the kernel
    K(s^2) - E(s^2), whose logarithmic singularity sits at s = 1.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    s, wk = _vortex_rule()
    out = np.empty_like(r)
    for start in range(0, len(r), 256):
        rr = r[start:start + 256, None]
        inner = (J(rr * s) * wk).sum(axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            outer_vals = J(rr / s) / s**3
        outer_vals = np.nan_to_num(outer_vals, nan=0.0, posinf=0.0, neginf=0.0)
        outer = (outer_vals * wk).sum(axis=1)
        out[start:start + 256] = VORTEX_PREFACTOR * rr[:, 0] * (inner + outer)
    return out


def vortex_vector_potential(current: CurrentProfile, lam: float, r: float,
                            spec: QuadratureSpec | None = None) -> float:
    """A(r) of the vortex by adaptive quadrature over r' (singular point r' = r)."""
    if not r > 0:
        raise DomainError("vortex_vector_potential needs r > 0")
    spec = spec or QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, max_subdivisions=4000)
    J = current.J

    def integrand(rp):
        rp = np.asarray(rp, dtype=float)
        lo = np.minimum(rp, r)
        hi = np.maximum(rp, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = lo / hi
            # 1 - q^2 without cancellation
            mc = (hi - lo) * (hi + lo) / (hi * hi)
            K, E = elliptic_KE_complementary(np.where(mc > 0, mc, 1.0))
            kern = np.where(q > 1e-4, K - E, 0.25 * np.pi * q * q * (1 + 0.375 * q * q))
            val = J(rp) * np.where(lo > 0, rp / np.where(lo > 0, lo, 1.0), 0.0) * kern
        return np.where((mc > 0) & np.isfinite(val), val, 0.0)

    inner = integrate(integrand, 0.0, r, QuadratureSpec(spec.abs_tol, spec.rel_tol,
                                                        spec.max_subdivisions, (r,)))
    outer = integrate(integrand, r, np.inf, QuadratureSpec(spec.abs_tol, spec.rel_tol,
                                                           spec.max_subdivisions, (r,)))
    return float(lam * VORTEX_PREFACTOR * (inner + outer))


def _length_scale(J: Callable) -> float:
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-8, max_subdivisions=4000)
    m2 = integrate(lambda r: J(r) * r * r, 0.0, np.inf, spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        mm1 = integrate(lambda r: np.where(r > 0, J(r) / np.where(r > 0, r, 1.0), 0.0),
                        0.0, np.inf, spec)
    if not (m2 > 0 and mm1 > 0):
        raise ConvergenceError("current moments vanish or diverge", estimate=(m2, mm1))
    return float((m2 / mm1) ** (1.0 / 3.0))


@lru_cache(maxsize=32)
def _vortex_table(J: Callable, decades: float = 7.0, per_decade: int = 200, rel_step: float = 1e-4):
    L = _length_scale(J)
    t = np.linspace(-decades, decades, int(2 * decades * per_decade) + 1)
    r = L * 10.0**t
    A = vortex_potential_fast(J, r)
    Ap = vortex_potential_fast(J, r * (1 + rel_step))
    Am = vortex_potential_fast(J, r * (1 - rel_step))
    dA = (Ap - Am) / (2 * rel_step * r)
    B = dA + A / r
    lnr = np.log(r)
    return r, CubicSpline(lnr, np.log(A)), CubicSpline(lnr, B), A, B


class VortexField:
    """Field of the planar current vortex lam * J(r) e_phi (zero total flux).

    A is tabulated once per current profile on a logarithmic radius grid and
    scaled by ``lam``; B = A' + A/r uses central differences of the exact A.
    """

    kind = "vortex"
    is_radial = True
    grid_spacing = None
    support_radius = math.inf

    def __init__(self, current: CurrentProfile, lam: float = 1.0):
        if lam < 0:
            raise DomainError("vortex strength must be non-negative")
        self.current = current
        self.lam = float(lam)
        self.name = f"vortex:{current.name}"
        r, sA, sB, A, B = _vortex_table(current.J)
        self._r, self._sA, self._sB = r, sA, sB
        self._A_ends = (A[0], A[-1])
        self._B_ends = (B[0], B[-1])

    def A(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self._r[0], self._r[-1]
        rc = np.clip(r, lo, hi)
        val = np.exp(self._sA(np.log(rc)))
        val = np.where(r < lo, self._A_ends[0] * r / lo, val)
        with np.errstate(divide="ignore"):
            val = np.where(r > hi, self._A_ends[1] * (hi / np.where(r > hi, r, hi)) ** 2, val)
        return self.lam * val

    def B(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self._r[0], self._r[-1]
        rc = np.clip(r, lo, hi)
        val = self._sB(np.log(rc))
        val = np.where(r < lo, self._B_ends[0], val)
        val = np.where(r > hi, self._B_ends[1] * (hi / np.where(r > hi, r, hi)) ** 3, val)
        return self.lam * val

    def enclosed_flux(self, r):
        return np.asarray(r, dtype=float) * self.A(r)

    @property
    def flux(self) -> float:
        # r A(r) = O(1/r): the flux of a localized vortex vanishes identically
        return 0.0

    def flux_within(self, r) -> float:
        """Flux through the disk of radius r (tends to 0 as r grows)."""
        return float(r * self.A(r))

    def B_xy(self, x, y):
        return self.B(np.hypot(x, y))

    def A_xy(self, x, y):
        r = np.hypot(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            a_over_r = np.where(r > 0, self.A(r) / np.where(r > 0, r, 1.0), self.A(1e-300) / 1e-300)
        return -y * a_over_r, x * a_over_r

    def phi(self, r):
        """phi(r) = -int_r^inf A(s) ds (zero flux, phi -> 0 at infinity)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10)
        return np.array([-integrate(self.A, float(x), np.inf, spec) for x in r])

    def phi_xy(self, x, y):
        return self.phi(np.hypot(x, y))

    def describe(self) -> dict:
        return {"profile": self.name, "kind": self.kind, "lambda": self.lam}


# --------------------------------------------------------------------------
# registry used by the CLI


FIELD_LIBRARY = {
    "uniform_disk": lambda B0=1.0, radius=1.0: uniform_disk(B0, radius),
    "annulus": lambda b_inner=-1.0, r_inner=0.5, b_outer=1.0, r_outer=1.5: annulus(b_inner, r_inner, b_outer, r_outer),
    "gaussian_window": lambda B0=1.0, width=1.0, cutoff=6.0: gaussian_window(B0, width, cutoff),
    "polynomial_bump": lambda B0=1.0, radius=1.0: polynomial_bump(B0, radius),
    "two_bumps": lambda flux_each=0.75, radius=0.6, separation=1.2: two_bumps(flux_each, radius, separation),
}

CURRENT_LIBRARY = {
    "r2exp": lambda c=1.0: exponential_current(c),
    "r2gauss": lambda c=1.0, width=1.0: gaussian_current(c, width),
}


def make_field(spec: dict):
    spec = dict(spec)
    name = spec.pop("profile")
    if name in ("grid_file", "sampled"):
        need = ("path",) if name == "grid_file" else ("r", "B")
        if sorted(spec) != sorted(need):
            raise DomainError(f"field profile {name!r} takes exactly {list(need)}")
        if name == "grid_file":
            return GridField.from_file(spec["path"])
        return SampledRadialField(spec["r"], spec["B"])
    if name not in FIELD_LIBRARY:
        raise DomainError(f"unknown field profile {name!r}")
    try:
        return FIELD_LIBRARY[name](**spec)
    except TypeError as exc:
        raise DomainError(f"bad parameters for field profile {name!r}: {exc}") from exc


def make_current(spec: dict) -> CurrentProfile:
    spec = dict(spec)
    name = spec.pop("profile")
    if name not in CURRENT_LIBRARY:
        raise DomainError(f"unknown current profile {name!r}")
    try:
        return CURRENT_LIBRARY[name](**spec)
    except TypeError as exc:
        raise DomainError(f"bad parameters for current profile {name!r}: {exc}") from exc
