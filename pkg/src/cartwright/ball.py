"""Poisson kernel, cap-averaged kernel and axially symmetric extensions.

Points of the ball in R^(n+1) are described by their polar angle ``phi`` to
the south pole and their distance ``y = 1 - |z|`` to the sphere.  Boundary
data depending only on the polar angle is an :class:`AxialBoundaryProfile`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import betainc, gammaln

from .errors import AccuracyError, DomainError
from .quadrature import graded_rule, integrate, sinh_nodes, sinh_panel_count

MODES = ("quadrature", "lemma1_estimate", "smallangle_estimate")


def check_dimension(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension n must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class BallPoint:
    phi: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.phi <= math.pi):
            raise DomainError(f"phi={self.phi} outside [0, pi]")
        if not (0.0 <= self.y <= 1.0):
            raise DomainError(f"y={self.y} outside [0, 1]")


@dataclass(frozen=True)
class AxialBoundaryProfile:
    """Boundary data ``t -> values(t)`` on [0, pi] (t = angle to the pole).

    ``values`` must accept numpy arrays.  ``breakpoints`` lists angles where
    the data is not smooth; quadratures split their panels there.
    """

    values: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple = ()
    grid: tuple | None = field(default=None, compare=False)

    def __call__(self, t):
        return self.values(np.asarray(t, float))

    @classmethod
    def constant(cls, c=1.0):
        return cls(lambda t: np.full(np.shape(t), float(c)))

    @classmethod
    def from_grid(cls, t, v, breakpoints=()):
        t = np.asarray(t, float)
        v = np.asarray(v, float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("profile grid must be strictly increasing")
        if t[0] > 0 or t[-1] < math.pi:
            raise DomainError("profile grid must cover [0, pi]")
        if not np.all(np.isfinite(v)):
            raise DomainError("profile values must be finite")
        interp = PchipInterpolator(t, v, extrapolate=True)
        return cls(lambda s: interp(s), tuple(breakpoints), (t, v))

    def masked(self, lo, hi):
        """This profile times the indicator of lo <= t <= hi."""
        f = self.values

        def g(t):
            t = np.asarray(t, float)
            return np.where((t >= lo) & (t <= hi), f(t), 0.0)

        bps = tuple(b for b in self.breakpoints if lo < b < hi) + tuple(
            b for b in (lo, hi) if 0.0 < b < math.pi)
        return AxialBoundaryProfile(g, tuple(sorted(set(bps))))


def sphere_constant(n: int) -> float:
    """C(n) with C(n) * int_0^pi sin^(n-1) t dt = 1."""
    return math.exp(gammaln((n + 1) / 2) - gammaln(n / 2)) / math.sqrt(math.pi)


def _azimuth_constant(n: int) -> float:
    # 1 / int_0^pi sin^(n-2) w dw, n >= 2
    return math.exp(gammaln(n / 2) - gammaln((n - 1) / 2)) / math.sqrt(math.pi)


def cap_measure(n: int, beta) -> np.ndarray | float:
    """Normalised surface measure of the cap {angle to the pole <= beta}."""
    beta = np.asarray(beta, float)
    half = 0.5 * betainc(n / 2, 0.5, np.sin(np.minimum(beta, math.pi - beta)) ** 2)
    out = np.where(beta <= math.pi / 2, half, 1.0 - half)
    return float(out) if out.ndim == 0 else out


def _dist2(y, one_minus_cos_half):
    # |z - xi|^2 = y^2 + 4(1-y) sin^2(psi/2), written via s2 = sin^2(psi/2)
    return y * y + 4.0 * (1.0 - y) * one_minus_cos_half


def poisson_kernel(n, y, psi):
    """Poisson kernel of the ball w.r.t. the normalised surface measure."""
    n = check_dimension(n)
    y = np.asarray(y, float)
    psi = np.asarray(psi, float)
    if np.any((y < 0) | (y > 1)):
        raise DomainError("y must lie in [0, 1]")
    if np.any((psi < 0) | (psi > math.pi)):
        raise DomainError("psi must lie in [0, pi]")
    if np.any((y == 0) & (psi == 0)):
        raise DomainError("Poisson kernel is singular at y = 0, psi = 0")
    d2 = _dist2(y, np.sin(0.5 * psi) ** 2)
    with np.errstate(divide="ignore"):
        out = y * (2.0 - y) / d2 ** ((n + 1) / 2)
    return float(out) if out.ndim == 0 else out


def cap_boundary_distance(y, a, t):
    """Distance between the circles S(0, t) and S(y, a) for t <= a."""
    y, a, t = (np.asarray(v, float) for v in (y, a, t))
    if np.any(t > a):
        raise DomainError("cap_boundary_distance requires t <= a")
    if np.any((y < 0) | (y > 1)):
        raise DomainError("y must lie in [0, 1]")
    d = np.sqrt(_dist2(y, np.sin(0.5 * (a - t)) ** 2))
    return float(d) if d.ndim == 0 else d


def ring_average(n, a, t, y, level=0, diff=None):
    """Average of P_y(x, xi) over xi in S(0, t), x at angle a.

    Vectorised over broadcast ``a, t, y``.  For n = 1 the ring is two
    points; for n >= 2 the average reduces to an azimuthal integral with
    weight sin^(n-2) w, graded towards w = 0 where the kernel peaks.
    ``diff`` optionally supplies ``a - t`` to full relative precision.
    """
    a, t, y = np.broadcast_arrays(*(np.asarray(v, float) for v in (a, t, y)))
    diff = a - t if diff is None else np.broadcast_to(np.asarray(diff, float), a.shape)
    half_diff = np.sin(0.5 * diff) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        if n == 1:
            half_sum = np.sin(0.5 * (a + t)) ** 2
            p1 = y * (2 - y) / _dist2(y, half_diff)
            p2 = y * (2 - y) / _dist2(y, half_sum)
            return 0.5 * (p1 + p2)
        sa_st = np.sin(a) * np.sin(t)
        width = np.sqrt(y * y + diff ** 2) / np.sqrt(np.maximum(sa_st, 1e-300))
        width = np.clip(width, 1e-300, 10.0)
        panels = sinh_panel_count(0.0, math.pi, width, level)
        w_nodes, w_weights = sinh_nodes(0.0, math.pi, width, panels, True)
        s2 = half_diff[..., None] + sa_st[..., None] * np.sin(0.5 * w_nodes) ** 2
        kern = (y * (2 - y))[..., None] / _dist2(y[..., None], s2) ** ((n + 1) / 2)
        if n > 2:
            w_weights = w_weights * np.sin(w_nodes) ** (n - 2)
        return _azimuth_constant(n) * np.sum(kern * w_weights, axis=-1)


MU_CHUNK = 4096


def _mu_block(n, a, y, t, diff, singular, rtol, max_levels):
    prev = ring_average(n, a, t, y, 0, diff)
    for level in range(1, max_levels + 1):
        cur = ring_average(n, a, t, y, level, diff)
        ok = singular | (np.abs(cur - prev) <= rtol * np.abs(cur) + 1e-300)
        if np.all(ok):
            return cur
        prev = cur
    bad = np.argmax(~ok)
    raise AccuracyError("averaged kernel quadrature did not converge",
                        (float(prev.flat[bad]), float(cur.flat[bad])))


def _mu_quadrature(n, a, y, t, rtol=1e-11, max_levels=6, diff=None):
    a, y, t = np.broadcast_arrays(*(np.asarray(v, float) for v in (a, y, t)))
    diff = a - t if diff is None else np.broadcast_to(np.asarray(diff, float), a.shape)
    singular = (y == 0) & (diff == 0)
    out = np.empty(a.shape)
    if n == 1:
        out[...] = ring_average(1, a, t, y, diff=diff)
    else:
        fa, fy, ft, fd = (np.ascontiguousarray(v).ravel() for v in (a, y, t, diff))
        fs, fo = singular.ravel(), out.reshape(-1)
        for i in range(0, fa.size, MU_CHUNK):
            sl = slice(i, i + MU_CHUNK)
            fo[sl] = _mu_block(n, fa[sl], fy[sl], ft[sl], fd[sl], fs[sl], rtol, max_levels)
        out = fo.reshape(a.shape)
    out[singular] = np.inf
    return out


def averaged_kernel(n, a, y, t, mode="quadrature", rtol=1e-11):
    """Mean of the Poisson kernel over the circle S(0, t) seen from (a, y).

    ``mode`` is ``quadrature`` (exact average), ``lemma1_estimate`` or
    ``smallangle_estimate``.  In quadrature mode a singular configuration
    (y = 0 and a = t) yields ``inf`` rather than raising.
    """
    n = check_dimension(n)
    a_, y_, t_ = (np.asarray(v, float) for v in (a, y, t))
    if np.any((y_ < 0) | (y_ > 1)) or np.any((a_ < 0) | (a_ > math.pi)) \
            or np.any((t_ < 0) | (t_ > math.pi)):
        raise DomainError("averaged_kernel: arguments outside their ranges")
    if mode == "quadrature":
        out = _mu_quadrature(n, a_, y_, t_, rtol=rtol)
    elif mode in ("lemma1_estimate", "smallangle_estimate"):
        if np.any(t_ > a_):
            raise DomainError(f"{mode} requires t <= a")
        if np.any(y_ <= 0):
            raise DomainError(f"{mode} requires y > 0")
        if mode == "lemma1_estimate":
            d = cap_boundary_distance(y_, a_, t_)
            out = y_ / (d * d * (d ** (n - 1) + np.sin(a_) ** (n - 1)))
        else:
            if np.any(a_ > math.pi / 2):
                raise DomainError("smallangle_estimate requires a <= pi/2")
            r2 = (a_ - t_) ** 2 + y_ ** 2
            out = y_ / (r2 * (r2 ** ((n - 1) / 2) + a_ ** (n - 1)))
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    out = np.asarray(out, float)
    return float(out) if out.ndim == 0 else out


def _extension_at_level(n, profile, a, y, level):
    t, wt, off = graded_rule(0.0, math.pi, focus=a, scale=y,
                             breakpoints=profile.breakpoints, level=level, offsets=True)
    mu = _mu_quadrature(n, a, y, t, rtol=1e-12, diff=-off)
    vals = profile(t) * mu
    if n > 1:
        vals = vals * np.sin(t) ** (n - 1)
    return sphere_constant(n) * float(np.dot(wt, vals))


def harmonic_extension_axial(n, profile, p, rtol=1e-11, atol=1e-13, max_levels=8):
    """Poisson extension of axially symmetric boundary data at ``p``."""
    n = check_dimension(n)
    if not isinstance(p, BallPoint):
        p = BallPoint(*p)
    if p.y <= 0:
        raise DomainError("harmonic extension requires y > 0")
    est = [_extension_at_level(n, profile, p.phi, p.y, 0)]
    for level in range(1, max_levels + 1):
        est.append(_extension_at_level(n, profile, p.phi, p.y, level))
        if not math.isfinite(est[-1]):
            raise AccuracyError("non-finite extension estimate", tuple(est[-2:]))
        if abs(est[-1] - est[-2]) <= max(atol, rtol * abs(est[-1])):
            return est[-1]
    raise AccuracyError(f"harmonic extension did not converge at (phi={p.phi:.6g}, y={p.y:.6g})",
                        tuple(est[-2:]))


def extension_many(n, profile, phis, ys, **kw):
    """Vector of extensions at points (phis[i], ys[i])."""
    phis, ys = np.broadcast_arrays(np.asarray(phis, float), np.asarray(ys, float))
    return np.array([harmonic_extension_axial(n, profile, BallPoint(float(a), float(b)), **kw)
                     for a, b in zip(phis.ravel(), ys.ravel())]).reshape(phis.shape)


def cap_average(n, profile, beta, rtol=1e-12, atol=1e-15):
    """Integral of the boundary data over the cap {t <= beta}, normalised measure."""
    n = check_dimension(n)
    if not (0.0 <= beta <= math.pi):
        raise DomainError("beta must lie in [0, pi]")
    if beta == 0:
        return 0.0
    bps = [b for b in profile.breakpoints if 0 < b < beta]

    def f(t):
        v = profile(t)
        return v * np.sin(t) ** (n - 1) if n > 1 else v

    return sphere_constant(n) * integrate(f, 0.0, beta, breakpoints=bps,
                                          rtol=rtol, atol=atol)
