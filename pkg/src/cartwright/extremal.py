"""The sharpness example: V = rho^-n sum_k f_k(cos phi) log^k(1/rho).

The f_k solve the cascade

    (1 - t^2) f_k'' - n t f_k' + n f_k = r_k,
    r_k = -(k+1) ((n+1) f_{k+1} + (k+2) f_{k+2}),

seeded with f_{n+1} = -t.  The operator has a regular singular point at
t = 1; everything is computed in u = 1 - t, where it reads

    u (2 - u) f'' + n (1 - u) f' + n f = r.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AccuracyError, ConstructionError, DomainError
from .panels import Layout, PanelFunction, default_layout

SERIES_ORDER = 40
GLUE_U = 1e-3
# The Frobenius series has radius 2 in u, so a long truncation converges on
# all of [0, 1].  Its values are smooth to rounding level, which the second
# derivatives of the cascade need; the glued solution is kept as a check.
LONG_ORDER = 220


def _F(n, nu):
    return nu * (2 * nu - 2 + n)


def _G(n, nu):
    return (nu + n) * (nu - 1)


def _e(n, j):
    # L[(1-u) log u] = (n-2)/u - (2n+1) + (n+1) u
    return {-1: n - 2, 0: -(2 * n + 1), 1: n + 1}.get(j, 0)


@dataclass(frozen=True)
class Frobenius:
    """f2(u) = A (1-u) log u + sum_m c_m u^(m+sigma)."""

    n: int
    sigma: int | float
    A: float
    c: np.ndarray

    def terms(self, u):
        u = np.asarray(u, float)[..., None]
        p = np.arange(self.c.size) + self.sigma
        return self.c * u ** p

    def value(self, u):
        u = np.asarray(u, float)
        out = np.sum(self.terms(u), axis=-1)
        if self.A:
            out = out + self.A * (1 - u) * np.log(u)
        return out

    def du(self, u):
        u = np.asarray(u, float)
        p = np.arange(self.c.size) + self.sigma
        out = np.sum(self.c * p * u[..., None] ** (p - 1), axis=-1)
        if self.A:
            out = out + self.A * (-np.log(u) + (1 - u) / u)
        return out

    def remainder(self, u):
        """Tail estimate from the ratio of the last two coefficients."""
        c = self.c
        if c[-2] == 0:
            return 0.0
        q = abs(c[-1] / c[-2]) * u
        if q >= 1:
            return float("inf")
        return abs(c[-1]) * u ** (c.size - 1 + self.sigma) * q / (1 - q)


def frobenius_f2(n, order=SERIES_ORDER):
    """Second Frobenius solution at u = 0 (coefficients by recurrence)."""
    if n < 2 or int(n) != n:
        raise DomainError("the cascade needs an integer n >= 2")
    n = int(n)
    if n == 2:
        sigma, A = 0, 1.0
        c = np.zeros(order + 1)
        c[0] = 0.0
        for m in range(1, order + 1):
            c[m] = (c[m - 1] * _G(n, m - 1) - A * _e(n, m - 1)) / _F(n, m)
        return Frobenius(n, sigma, A, c)
    if n % 2 == 1:
        sigma = 1 - n / 2
        c = np.zeros(order + 1)
        c[0] = 1.0
        for m in range(1, order + 1):
            c[m] = c[m - 1] * _G(n, m + sigma - 1) / _F(n, m + sigma)
        return Frobenius(n, sigma, 0.0, c)
    sigma = 1 - n // 2
    mstar = n // 2 - 1
    c = np.zeros(order + 1)
    c[0] = 1.0
    A = 0.0
    for m in range(1, order + 1):
        j = m + sigma
        if m == mstar:
            # the recurrence is obstructed at the integer root gap; the log
            # term absorbs it and c_{m*} is free (set to zero)
            A = c[m - 1] * _G(n, -1) / _e(n, -1)
            c[m] = 0.0
            continue
        c[m] = (c[m - 1] * _G(n, j - 1) - A * _e(n, j - 1)) / _F(n, j)
    return Frobenius(n, sigma, A, c)


@dataclass
class Homogeneous:
    """f1 = t and f2.

    f2 is the series near u = 0 glued to DOP853 beyond ``u0``.  When
    ``long`` is set (a series whose tail is negligible on [0, 1]) it is used
    everywhere instead and ``glue_gap`` records its distance to the glued
    solution.
    """

    n: int
    series: Frobenius
    u0: float
    ode: object = field(repr=False)
    long: Frobenius | None = field(default=None, repr=False)
    glue_gap: float = float("nan")

    def glued_u(self, u, deriv=0):
        u = np.asarray(u, float)
        near = u <= self.u0
        out = np.empty(u.shape)
        out[near] = (self.series.du if deriv else self.series.value)(u[near])
        if np.any(~near):
            out[~near] = self.ode.sol(u[~near])[deriv]
        return out

    def f2_u(self, u):
        if self.long is not None:
            return self.long.value(np.asarray(u, float))
        return self.glued_u(u)

    def f2_du(self, u):
        if self.long is not None:
            return self.long.du(np.asarray(u, float))
        return self.glued_u(u, 1)

    def f2(self, t):
        return self.f2_u(1.0 - np.asarray(t, float))

    def wronskian_u(self, u):
        """W = f1 f2' - f1' f2 (t-derivatives) as a function of u."""
        u = np.asarray(u, float)
        return -(1 - u) * self.f2_du(u) - self.f2_u(u)

    def g_u(self, u):
        u = np.asarray(u, float)
        return self.wronskian_u(u) * u ** (self.n / 2)

    def g(self, t):
        return self.g_u(1.0 - np.asarray(t, float))

    def abel_constant(self):
        """W(t) = C (1 - t^2)^(-n/2), so C = W(0) = -f2(0)."""
        return float(-self.f2_u(np.array(1.0)))


def homogeneous_solutions(n, order=SERIES_ORDER, u0=GLUE_U, check_grid=400,
                          long_order=LONG_ORDER):
    """(f1, f2, hom) for (1-t^2) f'' - n t f' + n f = 0.

    ``long_order=None`` keeps the glued f2.
    """
    ser = frobenius_f2(n, order)
    rem = ser.remainder(u0)
    scale = abs(float(ser.value(np.array(u0)))) + 1.0
    if rem > 1e-15 * scale:
        raise AccuracyError(f"Frobenius series not converged at u0={u0}", (rem, scale))

    def rhs(u, y):
        f, fu = y
        return [fu, (-n * (1 - u) * fu - n * f) / (u * (2 - u))]

    y0 = [float(ser.value(np.array(u0))), float(ser.du(np.array(u0)))]
    sol = solve_ivp(rhs, (u0, 1.0), y0, method="DOP853", rtol=1e-13, atol=1e-14 * scale,
                    dense_output=True)
    if not sol.success:
        raise AccuracyError(f"f2 integration failed: {sol.message}", ())
    hom = Homogeneous(n, ser, u0, sol)
    if long_order:
        long = frobenius_f2(n, long_order)
        if long.remainder(1.0) <= 1e-16 * scale:
            uu = np.linspace(u0, 1.0, check_grid)
            gap = np.max(np.abs(long.value(uu) - hom.glued_u(uu)))
            if gap > 1e-9 * scale:
                raise AccuracyError(f"long series and glued f2 disagree by {gap:.3g}", (gap,))
            hom = Homogeneous(n, ser, u0, sol, long, float(gap))
    u = np.concatenate([np.geomspace(1e-30, 0.5, check_grid), np.linspace(0.5, 1.0, check_grid)])
    g = hom.g_u(u)
    if not np.all(np.isfinite(g)) or np.min(np.abs(g)) <= 0 or \
            (np.min(g) < 0 < np.max(g)):
        raise ConstructionError("g vanishes or changes sign on [0, 1]")
    return (lambda t: np.asarray(t, float)), hom.f2, hom


def _node_values(layout, f):
    return f(layout.nodes())


def solve_inhomogeneous(n, r, homs, layout: Layout | None = None):
    """Bounded solution of (1-t^2) f'' - n t f' + n f = r by variation of parameters.

    ``r`` is a callable of u = 1 - t (vectorised) or an array of values at
    the layout nodes.  With K(s) = (1-s)^(n/2) / (g(s) (1-s^2)),

        f(t) = -t int_0^t r f2 K ds - f2(t) int_t^1 s r K ds.
    """
    layout = default_layout() if layout is None else layout
    hom = homs[2] if isinstance(homs, tuple) else homs
    u = layout.nodes()
    rv = np.asarray(r(u) if callable(r) else r, float)
    if rv.shape != u.shape:
        raise DomainError("r must be a callable of u or an array of node values")
    g = hom.g_u(u)
    f2 = hom.f2_u(u)
    kern = u ** (n / 2 - 1) / (g * (2 - u))
    h1 = PanelFunction.from_values(layout, rv * f2 * kern)
    h2 = PanelFunction.from_values(layout, (1 - u) * rv * kern)
    I1 = h1.integral_to_one()
    I2, _ = h2.integral_from_zero()
    vals = -(1 - u) * I1 - f2 * I2
    return PanelFunction.from_values(layout, vals)


def ode_residual_u(n, f: PanelFunction, r_vals, u):
    """Residual of u(2-u) f'' + n(1-u) f' + n f - r at points u (spectral derivatives)."""
    d1 = f.derivative_u()
    d2 = d1.derivative_u()
    return u * (2 - u) * d2.eval_u(u) + n * (1 - u) * d1.eval_u(u) + n * f.eval_u(u) - r_vals


@dataclass
class LogPolySolution:
    n: int
    f: list
    homs: Homogeneous = field(repr=False)
    layout: Layout = field(repr=False)

    def rhs_values(self, k, u=None):
        """r_k at u (default: the layout nodes)."""
        u = self.layout.nodes() if u is None else np.asarray(u, float)
        n = self.n
        f1 = self.f[k + 1].eval_u(u) if k + 1 <= n + 1 else 0.0
        f2 = self.f[k + 2].eval_u(u) if k + 2 <= n + 1 else 0.0
        return -(k + 1) * ((n + 1) * f1 + (k + 2) * f2)

    def __call__(self, k, t):
        return self.f[k](t)

    def axis_values(self):
        return np.array([fk.eval_u(np.array(0.0)) for fk in self.f])


def build_cascade(n, layout=None, order=SERIES_ORDER):
    """f_{n+1} = -t and f_n..f_0 by variation of parameters."""
    layout = default_layout() if layout is None else layout
    homs = homogeneous_solutions(n, order)
    hom = homs[2]
    u = layout.nodes()
    fs = [None] * (n + 2)
    fs[n + 1] = PanelFunction.from_values(layout, -(1 - u))
    sol = LogPolySolution(n, fs, hom, layout)
    for k in range(n, -1, -1):
        try:
            fs[k] = solve_inhomogeneous(n, sol.rhs_values(k), hom, layout)
        except Exception as exc:
            raise ConstructionError(f"cascade stage k={k}: {exc}") from exc
    return sol


def series_cascade(sol: LogPolySolution, order=160):
    """Independent power series (in u) of every f_k.

    The bounded solutions are analytic at u = 0 with radius 2, so
    d_j F(j) = r_{j-1} + d_{j-1} G(j-1), with d_0 = f_k(t=1) matching the
    free multiple of f1 = t.  Returns coefficient arrays, index k.
    """
    n = sol.n
    coefs = [None] * (n + 4)
    coefs[n + 2] = coefs[n + 3] = np.zeros(order + 1)
    top = np.zeros(order + 1)
    top[0], top[1] = -1.0, 1.0
    coefs[n + 1] = top
    for k in range(n, -1, -1):
        r = -(k + 1) * ((n + 1) * coefs[k + 1] + (k + 2) * coefs[k + 2])
        d = np.zeros(order + 1)
        d[0] = float(sol.f[k].eval_u(np.array(0.0)))
        for j in range(1, order + 1):
            d[j] = (r[j - 1] + d[j - 1] * _G(n, j - 1)) / _F(n, j)
        coefs[k] = d
    return coefs[: n + 2]


def eval_series(coefs, u):
    return np.polynomial.polynomial.polyval(np.asarray(u, float), coefs)


# ----------------------------------------------------------------------
# V and its checks


def assemble_V(sol: LogPolySolution, rho, phi):
    """V(rho, phi) = rho^-n sum_k f_k(cos phi) log^k(1/rho)."""
    rho, phi = np.broadcast_arrays(np.asarray(rho, float), np.asarray(phi, float))
    if np.any(rho <= 0):
        raise DomainError("rho must be positive")
    # u = 1 - cos(phi) = 2 sin^2(phi/2) keeps precision near the axis
    u = 2.0 * np.sin(0.5 * phi) ** 2
    L = np.log(1.0 / rho)
    acc = np.zeros(rho.shape)
    for k in range(sol.n + 1, -1, -1):
        acc = acc * L + sol.f[k].eval_u(u)
    out = rho ** (-sol.n) * acc
    return float(out) if out.ndim == 0 else out


def axis_log_magnitude(sol, L):
    """log(-t^n V(t, 0)) as a function of L = log(1/t), without overflow."""
    a = sol.axis_values()
    L = np.asarray(L, float)
    poly = np.polynomial.polynomial.polyval(L, a)
    return np.log(-poly)


def ball_to_polar(phi_b, y):
    """(rho, phi) of 1 - z for z at polar angle phi_b (to eta) and depth y."""
    phi_b, y = np.broadcast_arrays(np.asarray(phi_b, float), np.asarray(y, float))
    xp = y + 2.0 * (1.0 - y) * np.sin(0.5 * phi_b) ** 2
    yp = (1.0 - y) * np.sin(phi_b)
    rho = np.hypot(xp, yp)
    phi = np.arctan2(yp, xp)
    return rho, phi


def pde_residual(sol, rho, phi, h):
    """Second-order FD residual of V_rr + n V_r / r + V_pp / r^2 + (n-1) cot(p) V_p / r^2.

    On the axis (phi = 0) the last two terms combine into n V_pp / r^2.
    Returns (residual, scale) where scale sums the magnitudes of the terms.
    """
    n = sol.n
    V = lambda r, p: assemble_V(sol, r, p)
    v0 = V(rho, phi)
    vr_p, vr_m = V(rho + h, phi), V(rho - h, phi)
    vp_p, vp_m = V(rho, phi + h), V(rho, np.abs(phi - h))
    Vrr = (vr_p - 2 * v0 + vr_m) / h ** 2
    Vr = (vr_p - vr_m) / (2 * h)
    Vpp = (vp_p - 2 * v0 + vp_m) / h ** 2
    Vp = (vp_p - vp_m) / (2 * h)
    axis = phi == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cot_term = np.where(axis, (n - 1) * Vpp, (n - 1) * Vp / np.tan(phi))
    terms = [Vrr, n * Vr / rho, Vpp / rho ** 2, cot_term / rho ** 2]
    res = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    return res, scale


@dataclass
class ExampleRecord:
    n: int
    cascade_residual_max: float
    pde_residual_max: float
    pde_relative_max: float
    pde_convergence_ratio: float
    pde_richardson_max: float
    pde_richardson_relative: float
    upper_C: float
    upper_M: float
    lower_C1: float
    log_exponent_fit: float
    log_exponent_fit_near: float
    log_exponent_fit_far: float
    axis_limit_drift: float


def cascade_residuals(sol, h=1e-3, count=401):
    """Max FD residual of each cascade equation (5-point stencils, interior t grid)."""
    n = sol.n
    t = np.linspace(2 * h, 1 - 2 * h, count)
    out = []
    for k in range(n + 2):
        f = sol.f[k]
        fm2, fm1, f0, fp1, fp2 = (f(t + j * h) for j in (-2, -1, 0, 1, 2))
        d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
        d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
        r = sol.rhs_values(k, 1 - t) if k <= n else 0.0
        out.append(float(np.max(np.abs((1 - t * t) * d2 - n * t * d1 + n * f0 - r))))
    return out


def pde_grid(count_rho=18, count_phi=13, rho=(0.05, 0.9), phi=(0.0, 1.2)):
    R, P = np.meshgrid(np.linspace(*rho, count_rho), np.linspace(*phi, count_phi), indexing="ij")
    return R, P


def verify_example(sol, h=1e-3, t_range=(1e-4, 0.1), fit_L=(20.0, 200.0), far_L=(1e2, 1e6),
                   fit_count=200):
    """PDE residual, upper/lower constants and the on-axis exponent fits.

    On the axis -V t^n is a polynomial of degree n+1 in L = log(1/t), so the
    log-log slope only approaches n+1 as L grows.  ``log_exponent_fit`` uses
    L in ``fit_L`` (t between e^-200 and e^-20); the fit over ``t_range`` is
    kept as ``log_exponent_fit_near``.
    """
    n = sol.n
    casc = max(cascade_residuals(sol))
    R, P = pde_grid()
    r1, s1 = pde_residual(sol, R, P, h)
    r2, _ = pde_residual(sol, R, P, h / 2)
    rich = (4 * r2 - r1) / 3
    ratio = float(np.max(np.abs(r1)) / np.max(np.abs(r2)))
    # upper bound V rho^n cos^n phi over a wide grid
    rr = np.geomspace(1e-12, 1.0, 200)[:, None]
    pp = np.linspace(0.0, math.pi / 2 * (1 - 1e-9), 200)[None, :]
    Vg = assemble_V(sol, rr, pp)
    upper = float(np.max(Vg * rr ** n * np.cos(pp) ** n))
    uu = np.concatenate([np.geomspace(1e-30, 0.5, 200), np.linspace(0.5, 1, 100)])
    M = float(sum(np.max(np.abs(sol.f[k].eval_u(uu))) for k in range(n + 1)))
    # axis
    t = np.geomspace(t_range[0], t_range[1], fit_count)
    L = np.log(1 / t)
    mag = axis_log_magnitude(sol, L)
    C1 = float(np.min(np.exp(mag - (n + 1) * np.log(L))))
    near = float(np.polyfit(np.log(L), mag, 1)[0])

    def fit(lo_hi):
        Lf = np.geomspace(lo_hi[0], lo_hi[1], fit_count)
        return float(np.polyfit(np.log(Lf), axis_log_magnitude(sol, Lf), 1)[0])
    # -V t^n / L^(n+1) over the last decade of t
    last = (t <= t_range[0] * 10)
    lim = np.exp(mag - (n + 1) * np.log(L))[last]
    drift = float((lim.max() - lim.min()) / lim.min())
    return ExampleRecord(n, casc, float(np.max(np.abs(r1))), float(np.max(np.abs(r1) / s1)),
                         ratio, float(np.max(np.abs(rich))), float(np.max(np.abs(rich) / s1)),
                         upper, M ** (n + 1), C1, fit(fit_L), near, fit(far_L), drift)


# ----------------------------------------------------------------------
# n = 1


def closed_form_n1(x, y, variant=False):
    """Re(-(1-z) log^2(1-z)); with ``variant`` Re(-log^2(1-z) / (1-z))."""
    z = np.asarray(x, float) + 1j * np.asarray(y, float)
    if np.any(np.abs(z) >= 1):
        if np.any(z == 1):
            raise DomainError("z = 1 is the boundary singularity")
        raise DomainError("closed_form_n1 needs |z| < 1")
    w = 1 - z
    lg = np.log(w)
    out = np.real(-lg * lg / w) if variant else np.real(-w * lg * lg)
    return float(out) if out.ndim == 0 else out


def laplacian_fd(f, x, y, h):
    """Fourth-order 9-point (cross) Laplacian."""
    def d2(shift):
        fm2, fm1, f0, fp1, fp2 = (shift(j * h) for j in (-2, -1, 0, 1, 2))
        return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    return d2(lambda s: f(x + s, y)) + d2(lambda s: f(x, y + s))


def n1_report(count=100, seed=42, radius=0.9):
    """Harmonicity residuals and axis/envelope behaviour of both n = 1 forms."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, count))
    a = rng.uniform(0, 2 * np.pi, count)
    x, y = r * np.cos(a), r * np.sin(a)
    out = {}
    for name, var in (("verbatim", False), ("variant", True)):
        f = lambda X, Y: closed_form_n1(X, Y, var)
        h = 1e-2 * np.abs(1 - (x + 1j * y))
        res = laplacian_fd(f, x, y, h)
        rr = np.geomspace(1e-8, 0.5, 200)
        axis = f(1 - rr, 0 * rr)
        ok = axis < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = float(np.polyfit(np.log(np.log(1 / rr[ok])), np.log(-axis[ok] * rr[ok]), 1)[0]) \
                if np.count_nonzero(ok) > 2 else float("nan")
        # envelope: sup U (1-|z|) over a polar grid
        R, A = np.meshgrid(1 - np.geomspace(1e-8, 1, 200), np.linspace(-np.pi, np.pi, 181))
        U = f(R * np.cos(A), R * np.sin(A))
        out[name] = {"laplacian_residual_max": float(np.max(np.abs(res))),
                     "axis_slope": slope, "axis_value_near_1": float(axis[0]),
                     "envelope_C": float(np.max(U * (1 - R)))}
    return out


def export_csv(path, sol, count=201):
    t = np.linspace(0.0, 1.0, count)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t"] + [f"f_{k}" for k in range(sol.n + 2)])
        for i, ti in enumerate(t):
            wr.writerow([f"{ti:.17g}"] + [f"{float(fk(ti)):.17g}" for fk in sol.f])


def export_axis_csv(path, sol, count=200, rho_min=1e-4):
    rho = np.geomspace(rho_min, 1.0, count)
    v = assemble_V(sol, rho, 0.0)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["rho", "V"])
        for a, b in zip(rho, v):
            wr.writerow([f"{a:.17g}", f"{b:.17g}"])
