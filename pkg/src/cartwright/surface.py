"""The auxiliary surface Gamma_a and the harmonic function v_a.

Given a decreasing weight ``k`` with ``k(0) <= lam/beta^n`` and
``int_0^1 (k/y)^(1/(n+1)) dy <= lam^(1/(n+1))``, the surface is the graph
``phi(x, eta) = gamma(y)`` for y in [0, rho], and ``v_a`` is the harmonic
extension of ``k(y(gamma))`` (zero on the cap of opening beta).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .ball import (AxialBoundaryProfile, BallPoint, averaged_kernel, cap_average,
                   check_dimension, harmonic_extension_axial)
from .errors import ConstructionError, DomainError, InvariantViolation
from .quadrature import bisect_increasing, integrate

Y_FLOOR = 1e-300


@dataclass(frozen=True)
class NormalizedWeightK:
    """Weight ``k`` on [0, 1] with its normalising data.

    ``logk`` is used when given (keeps y/k(y) finite where k underflows).
    ``D_bound`` is ``int_0^1 (k/y)^(1/(n+1)) dy``; computed when omitted.
    """

    n: int
    k: Callable
    lam: float
    beta: float
    logk: Optional[Callable] = None
    D_bound: float = float("nan")

    def __post_init__(self):
        check_dimension(self.n)
        if not (0 < self.lam <= 1 / (3 * math.pi) * (1 + 1e-12)):
            raise DomainError(f"lambda={self.lam} must lie in (0, 1/(3 pi)]")
        if not (0 < self.beta <= math.pi / 2):
            raise DomainError(f"beta={self.beta} must lie in (0, pi/2]")
        if math.isnan(self.D_bound):
            object.__setattr__(self, "D_bound", self._integral())

    def log_k(self, y):
        y = np.asarray(y, float)
        if self.logk is not None:
            return self.logk(y)
        with np.errstate(divide="ignore"):
            return np.log(self.k(y))

    def __call__(self, y):
        out = np.asarray(self.k(np.asarray(y, float)), float)
        return float(out) if out.ndim == 0 else out

    def _integral(self):
        m = self.n + 1

        def f(u):
            # y = u^(n+1) removes the y^(-1/(n+1)) endpoint singularity
            return m * u ** (self.n - 1) * np.exp(self.log_k(u ** m) / m)
        return integrate(f, 0.0, 1.0, focus=0.0, scale=1e-3, rtol=1e-11, atol=1e-300)

    def invariant_slack(self):
        """(k(0) beta^n / lam, D / lam^(1/(n+1))); both must be <= 1."""
        k0 = float(np.exp(self.log_k(0.0)))
        return (k0 * self.beta ** self.n / self.lam,
                self.D_bound / self.lam ** (1 / (self.n + 1)))

    def check_invariants(self, rtol=1e-9):
        a, b = self.invariant_slack()
        if a > 1 + rtol or b > 1 + rtol:
            raise DomainError(f"k violates its normalisation: k(0)beta^n/lam={a:.6g},"
                              f" D/lam^(1/(n+1))={b:.6g}")


def _log_ratio(kw, y):
    # log(y / k(y)), increasing in y
    return math.log(max(y, Y_FLOOR)) - float(kw.log_k(y))


def _root_log_ratio(kw, target_log):
    return bisect_increasing(lambda y: _log_ratio(kw, y), target_log, Y_FLOOR, 1.0,
                             rtol=1e-15)


def solve_s(n, k, beta):
    """Root of y/k(y) = beta^(n+1)."""
    return _root_log_ratio(k, (n + 1) * math.log(beta))


def solve_rho(n, k, beta):
    """Root of y/k(y) = (pi - beta)^(n+1); lies in (s, 1)."""
    return _root_log_ratio(k, (n + 1) * math.log(math.pi - beta))


def gamma_of_y(kw, s, y):
    """The profile gamma on [0, rho], both branches."""
    n, beta = kw.n, kw.beta
    y = np.asarray(y, float)
    with np.errstate(divide="ignore"):
        lr = np.log(np.maximum(y, Y_FLOOR)) - kw.log_k(y)
    low = beta + np.exp(0.5 * (lr - (n - 1) * math.log(beta)))
    high = beta + np.exp(lr / (n + 1))
    out = np.where(y <= s, low, high)
    out = np.where(y <= 0, beta, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SurfaceProfile:
    n: int
    beta: float
    lam: float
    s: float
    rho: float
    y_grid: np.ndarray = field(repr=False)
    gamma_grid: np.ndarray = field(repr=False)
    kw: NormalizedWeightK = field(repr=False)
    _inverse: object = field(repr=False, compare=False)

    def gamma(self, y):
        return gamma_of_y(self.kw, self.s, y)

    def y_of_gamma(self, g):
        """Inverse of gamma on [beta, pi] by monotone interpolation in log variables."""
        g = np.asarray(g, float)
        if np.any(g < self.beta - 1e-14) or np.any(g > math.pi + 1e-12):
            raise ConstructionError("y_of_gamma: argument outside [beta, pi]")
        d = np.maximum(g - self.beta, 0.0)
        gmin = self.gamma_grid[0] - self.beta
        with np.errstate(divide="ignore"):
            ld = np.log(np.maximum(d, 1e-300))
        inside = np.exp(self._inverse(np.clip(ld, math.log(gmin), None)))
        # below the grid the first branch is y = k(0) beta^(n-1) (gamma-beta)^2
        k0 = float(np.exp(self.kw.log_k(0.0)))
        tiny = k0 * self.beta ** (self.n - 1) * d * d
        out = np.where(d < gmin, tiny, inside)
        out = np.minimum(out, self.rho)
        return float(out) if out.ndim == 0 else out


def build_surface(n, kw: NormalizedWeightK, count=10_000, decades=14):
    """gamma on a log grid of [s 10^-decades, rho], refined around s."""
    n = check_dimension(n)
    kw.check_invariants()
    s = solve_s(n, kw, kw.beta)
    rho = solve_rho(n, kw, kw.beta)
    if not (0 < s < rho < 1):
        raise ConstructionError(f"expected 0 < s < rho < 1, got s={s}, rho={rho}")
    if s > kw.lam * kw.beta * (1 + 1e-12):
        raise InvariantViolation(f"s={s} exceeds lam*beta={kw.lam * kw.beta}")
    lo = s * 10.0 ** (-decades)
    half = count // 2
    ys = np.unique(np.concatenate([
        np.geomspace(lo, s, half),
        np.geomspace(s, rho, count - half),
        s * (1 + np.linspace(-1e-3, 1e-3, 21)),
        [rho]]))
    ys = ys[(ys > 0) & (ys <= rho)]
    g = gamma_of_y(kw, s, ys)
    if np.any(np.diff(g) <= 0):
        bad = int(np.argmax(np.diff(g) <= 0))
        raise ConstructionError(f"gamma is not increasing near y={ys[bad]:.6g}")
    inv = PchipInterpolator(np.log(g - kw.beta), np.log(ys), extrapolate=True)
    return SurfaceProfile(n, kw.beta, kw.lam, s, rho, ys, g, kw, inv)


def build_va(n, kw, surface: SurfaceProfile):
    """Boundary profile of v_a and its value at the centre."""
    beta = surface.beta

    def values(t):
        t = np.asarray(t, float)
        inside = (t >= beta)
        y = surface.y_of_gamma(np.clip(t, beta, math.pi))
        return np.where(inside, kw(y), 0.0)

    # k(y(gamma)) varies on every scale of gamma - beta; break geometrically
    gaps = beta * 2.0 ** np.arange(-20, 40)
    bps = [beta] + [float(beta + g) for g in gaps if beta + g < math.pi]
    prof = AxialBoundaryProfile(values, tuple(bps))
    return prof, cap_average(n, prof, math.pi)


@dataclass
class SurfaceBounds:
    sample_count: int
    ylphb_pass: bool
    ylphb_max_ratio: float
    mu_over_k_max: float
    va_over_k_min: float
    va_over_k_max: float
    samples: dict = field(default_factory=dict, repr=False)


def surface_samples(surface, sample_count, seed=42):
    """Random surface depths, log-uniform on [s 1e-6, rho], plus s and rho."""
    rng = np.random.default_rng(seed)
    lo, hi = math.log(surface.s * 1e-6), math.log(surface.rho)
    ys = np.exp(rng.uniform(lo, hi, max(sample_count - 2, 0)))
    return np.sort(np.concatenate([ys, [surface.s, surface.rho]]))[:sample_count]


def verify_surface_bounds(n, kw, surface, sample_count=1000, seed=42, va_profile=None,
                          with_va=True):
    """Measure (e:ylphb), mu/k and v_a/k at sampled surface points."""
    ys = surface_samples(surface, sample_count, seed)
    g = surface.gamma(ys)
    gap = g - surface.beta
    ratio = ys / gap
    ok = bool(np.all(ys <= gap * (1 + 1e-12)))
    if not ok:
        bad = int(np.argmax(ys > gap))
        raise InvariantViolation(f"y <= gamma(y) - beta fails at y={ys[bad]:.6g}")
    kv = kw(ys)
    mu = averaged_kernel(n, np.minimum(g, math.pi), ys, surface.beta)
    mu_k = mu / kv
    va = np.full(ys.shape, np.nan)
    if with_va:
        if va_profile is None:
            va_profile, _ = build_va(n, kw, surface)
        va = np.array([harmonic_extension_axial(n, va_profile, BallPoint(min(float(a), math.pi), float(y)),
                                                rtol=1e-8, atol=1e-14)
                       for a, y in zip(g, ys)])
    va_k = va / kv
    return SurfaceBounds(
        sample_count=int(ys.size), ylphb_pass=ok, ylphb_max_ratio=float(np.max(ratio)),
        mu_over_k_max=float(np.max(mu_k)),
        va_over_k_min=float(np.nanmin(va_k)) if with_va else float("nan"),
        va_over_k_max=float(np.nanmax(va_k)) if with_va else float("nan"),
        samples={"y": ys, "gamma": g, "k": kv, "mu": mu, "va": va})


def export_csv(path, n, kw, surface, rows=200, seed=42):
    """Write (y, gamma, k_of_y, mu_at_beta, va_value) at sampled surface depths."""
    b = verify_surface_bounds(n, kw, surface, rows, seed)
    smp = b.samples
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["y", "gamma", "k_of_y", "mu_at_beta", "va_value"])
        for row in zip(smp["y"], smp["gamma"], smp["k"], smp["mu"], smp["va"]):
            wr.writerow([f"{v:.17g}" for v in row])
    return b
