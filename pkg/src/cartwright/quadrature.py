"""Graded Gauss-Legendre quadrature and monotone bisection.

Every integrand in this package is either smooth or has one sharp feature
(a Lorentzian-like kernel peak of known width, an endpoint power/log
singularity).  Both are handled by the same device: composite
Gauss-Legendre in a variable ``tau`` with ``x = x0 + h*sinh(tau)``, which
places nodes geometrically around ``x0`` down to the scale ``h``.
Refinement doubles the number of panels until two successive estimates
agree.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, BracketError

GL_ORDER = 16
MAX_NODES = 4_000_000


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    """Nodes and weights of the m-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def composite_unit(panels: int, m: int = GL_ORDER):
    """Composite rule on [0, 1] with ``panels`` equal panels."""
    x, w = gauss_legendre(m)
    edges = np.arange(panels, dtype=float)[:, None]
    s = ((edges + x[None, :]) / panels).ravel()
    ws = np.tile(w / panels, panels)
    return s, ws


def sinh_panel_count(lo, hi, h, level=0):
    """Panels needed so that each covers about two units of ``tau``."""
    span = np.max(np.asarray(hi, float) - np.asarray(lo, float))
    hmin = max(float(np.min(h)), 1e-300)
    T = math.asinh(span / hmin) if span > 0 else 0.0
    return (int(math.ceil(T / 2.0)) + 1) * 2 ** level


def sinh_nodes(lo, hi, h, panels, toward_lo=True, m=GL_ORDER):
    """Nodes/weights on [lo, hi] clustered at one end with length scale h.

    ``lo``, ``hi``, ``h`` broadcast against each other; the returned arrays
    have one extra trailing axis holding the nodes.
    """
    lo = np.asarray(lo, float)[..., None]
    hi = np.asarray(hi, float)[..., None]
    h = np.maximum(np.asarray(h, float)[..., None], 1e-300)
    s, ws = composite_unit(panels, m)
    L = hi - lo
    T = np.arcsinh(L / h)
    tau = s * T
    dx = h * np.sinh(tau)
    # keep nodes strictly inside [lo, hi] despite rounding in sinh(asinh(.))
    dx = np.minimum(dx, L)
    x = lo + dx if toward_lo else hi - dx
    w = h * np.cosh(tau) * T * ws
    return x, w


def _subintervals(a, b, breakpoints):
    pts = sorted({float(a), float(b), *(float(p) for p in breakpoints if a < p < b)})
    return list(zip(pts[:-1], pts[1:]))


def graded_rule(a, b, focus=None, scale=None, breakpoints=(), level=0, m=GL_ORDER,
                offsets=False):
    """Quadrature nodes/weights on [a, b].

    The interval is split at ``breakpoints`` (and at ``focus`` when it lies
    inside).  Each piece is graded towards whichever of its ends is closest
    to ``focus``, with length scale ``sqrt(dist**2 + scale**2)``.  Without a
    focus the pieces get plain composite Gauss-Legendre.

    With ``offsets=True`` a third array holds ``x - focus`` computed without
    the rounding of ``x`` itself, which matters when the scale is far below
    the spacing of floats near ``focus``.
    """
    bps = list(breakpoints)
    if focus is not None:
        bps.append(focus)
    xs, ws, offs = [], [], []
    for lo, hi in _subintervals(a, b, bps):
        if focus is None:
            panels = 2 ** level * 2
            s, w = composite_unit(panels, m)
            xs.append(lo + (hi - lo) * s)
            ws.append((hi - lo) * w)
            offs.append(np.full(s.shape, np.nan))
            continue
        d_lo, d_hi = abs(lo - focus), abs(hi - focus)
        toward_lo = d_lo <= d_hi
        d = d_lo if toward_lo else d_hi
        sc = 0.0 if scale is None else float(scale)
        h = math.hypot(d, sc)
        if h == 0.0:
            h = 1e-300
        panels = sinh_panel_count(lo, hi, h, level)
        x, w = sinh_nodes(lo, hi, h, panels, toward_lo, m)
        xs.append(x)
        ws.append(w)
        if offsets:
            end = lo if toward_lo else hi
            # dx taken from the sinh map directly, not from the rounded x
            L = hi - lo
            T = math.asinh(L / h)
            s_, _ = composite_unit(panels, m)
            d = np.minimum(h * np.sinh(s_ * T), L)
            offs.append((end - focus) + (d if toward_lo else -d))
    if not xs:
        empty = np.zeros(0)
        return (empty, empty, empty) if offsets else (empty, empty)
    if offsets:
        return np.concatenate(xs), np.concatenate(ws), np.concatenate(offs)
    return np.concatenate(xs), np.concatenate(ws)


def integrate(f, a, b, *, focus=None, scale=None, breakpoints=(), rtol=1e-9,
              atol=1e-12, max_levels=20, m=GL_ORDER):
    """Adaptive integral of a vectorised ``f`` over [a, b].

    Refines by doubling the panel count until two successive estimates agree
    to ``max(atol, rtol*|I|)``.  Raises AccuracyError carrying the last two
    estimates when the level budget or node budget runs out.
    """
    if b <= a:
        return 0.0
    prev = None
    for level in range(max_levels + 1):
        x, w = graded_rule(a, b, focus, scale, breakpoints, level, m)
        if x.size > MAX_NODES:
            break
        cur = float(np.dot(w, f(x)))
        if prev is not None and abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return cur
        if not math.isfinite(cur):
            raise AccuracyError(f"non-finite quadrature estimate on [{a}, {b}]", (prev, cur))
        prev = cur
    raise AccuracyError(f"quadrature on [{a}, {b}] did not converge", (prev, cur))


def bisect_increasing(f, target, lo, hi, rtol=1e-12, max_iter=400):
    """Root of ``f(x) = target`` for increasing ``f`` on [lo, hi].

    Bisects geometrically while the bracket spans more than a factor of two
    (roots here can sit many decades below ``hi``), arithmetically after.
    """
    flo, fhi = f(lo) - target, f(hi) - target
    if flo > 0 or fhi < 0:
        raise BracketError(
            f"no sign change for target {target:.6g} on [{lo:.6g}, {hi:.6g}]"
            f" (f-target = {flo:.3g}, {fhi:.3g})")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    for _ in range(max_iter):
        if hi - lo <= rtol * hi:
            break
        if lo > 0 and hi > 2 * lo:
            mid = math.sqrt(lo * hi)
        elif lo == 0 and hi > 1e-300:
            mid = max(hi * 1e-8, 1e-300) if hi > 1e-290 else 0.5 * hi
        else:
            mid = 0.5 * (lo + hi)
        fm = f(mid) - target
        if fm == 0:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
