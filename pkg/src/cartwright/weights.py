"""Radial weights and their regularity conditions.

A :class:`Weight` is a strictly decreasing positive function on (0, 1].
Built-in families carry closed-form log-derivatives so that quantities
such as ``w/w'`` or ``w(a)/w(b)`` stay finite where ``w`` itself
overflows (e.g. ``exp(1/y)`` near 0).
"""
from __future__ import annotations

import math
import shlex
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (AccuracyError, ConstructionError, DomainError,
                     MonotonicityError)
from .quadrature import composite_unit, integrate


def _arr(y):
    return np.asarray(y, float)


def _out(v):
    v = np.asarray(v, float)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class Weight:
    """Weight w with derivative evaluators.

    ``logw``, ``dlogw`` (= w'/w) and ``d2logw`` (= (log w)'') are optional
    closed forms; when absent they are derived from ``w``, ``dw``, ``d2w``
    (the latter by central differences of ``dw`` when missing).
    """

    w: Callable
    dw: Callable
    d2w: Optional[Callable] = None
    family: str = "custom"
    params: dict = field(default_factory=dict)
    scale: float = 1.0
    logw: Optional[Callable] = None
    dlogw: Optional[Callable] = None
    d2logw: Optional[Callable] = None

    def __call__(self, y):
        with np.errstate(over="ignore"):
            return _out(self.w(_arr(y)))

    # log-derivatives --------------------------------------------------
    def log(self, y):
        y = _arr(y)
        if self.logw is not None:
            return _out(self.logw(y))
        with np.errstate(divide="ignore"):
            return _out(np.log(self.w(y)))

    def ell1(self, y):
        """w'/w."""
        y = _arr(y)
        if self.dlogw is not None:
            return _out(self.dlogw(y))
        return _out(self.dw(y) / self.w(y))

    def second_derivative(self, y):
        y = _arr(y)
        if self.d2w is not None:
            return _out(self.d2w(y))
        h = y * 1e-5
        d1 = (self.dw(y + h) - self.dw(y - h)) / (2 * h)
        d2 = (self.dw(y + 2 * h) - self.dw(y - 2 * h)) / (4 * h)
        scale = np.maximum(np.abs(d1), np.abs(self.dw(y)) / np.maximum(y, 1e-300))
        if np.any(np.abs(d1 - d2) > 1e-4 * scale):
            raise AccuracyError("central differences of dw are unstable on this grid",
                                (float(np.max(d1)), float(np.max(d2))))
        return _out((4 * d1 - d2) / 3)

    def ell2(self, y):
        """(log w)'' = w''/w - (w'/w)^2."""
        y = _arr(y)
        if self.d2logw is not None:
            return _out(self.d2logw(y))
        l1 = self.ell1(y)
        return _out(self.second_derivative(y) / self.w(y) - l1 * l1)

    def ratio(self, y):
        """w/w'."""
        return _out(1.0 / self.ell1(y))

    def ratio_prime(self, y):
        """(w/w')' = 1 - w w''/w'^2 = -(log w)''/((log w)')^2."""
        l1 = self.ell1(y)
        return _out(-self.ell2(y) / (l1 * l1))

    # derived accessors ------------------------------------------------
    def alpha(self, theta):
        """-w(theta) / (10 w'(theta))."""
        theta = _arr(theta)
        if np.any((theta <= 0) | (theta >= 1)):
            raise DomainError("alpha requires 0 < theta < 1")
        l1 = self.ell1(theta)
        if np.any(l1 >= 0):
            raise MonotonicityError("w' >= 0 where alpha is requested")
        return _out(-1.0 / (10.0 * l1))

    def kappa(self, n, y):
        """w^(1/(n+1))."""
        return _out(np.exp(self.log(y) / (n + 1)))

    def psi(self, t):
        """log w(e^-t)."""
        return self.log(np.exp(-_arr(t)))

    def psi1(self, t):
        y = np.exp(-_arr(t))
        return _out(-y * self.ell1(y))

    def psi2(self, t):
        y = np.exp(-_arr(t))
        return _out(y * self.ell1(y) + y * y * self.ell2(y))

    def ratio_to(self, a, b):
        """w(a)/w(b) computed in log space."""
        with np.errstate(over="ignore"):
            return _out(np.exp(self.log(a) - self.log(b)))

    def scaled(self, c):
        """The weight c*w (keeps log-derivatives, multiplies the scale)."""
        if c <= 0:
            raise DomainError("scale factor must be positive")
        w, dw, d2w, logw = self.w, self.dw, self.d2w, self.logw
        return Weight(
            w=lambda y: c * w(y), dw=lambda y: c * dw(y),
            d2w=None if d2w is None else (lambda y: c * d2w(y)),
            family=self.family, params=dict(self.params), scale=self.scale * c,
            logw=(lambda y: math.log(c) + logw(y)) if logw is not None else None,
            dlogw=self.dlogw if self.dlogw is not None else (lambda y: dw(y) / w(y)),
            d2logw=self.d2logw)


# ----------------------------------------------------------------------
# built-in families


def power(p):
    """y^-p."""
    p = float(p)
    return Weight(
        w=lambda y: y ** -p, dw=lambda y: -p * y ** (-p - 1),
        d2w=lambda y: p * (p + 1) * y ** (-p - 2), family="power", params={"p": p},
        logw=lambda y: -p * np.log(y), dlogw=lambda y: -p / y,
        d2logw=lambda y: p / (y * y))


def threshold(n):
    """y^-n, the borderline weight."""
    w = power(n)
    return Weight(**{**w.__dict__, "family": "threshold", "params": {"n": n}})


def power_log(p, q):
    """y^-p (1 + |log y|)^q."""
    p, q = float(p), float(q)

    def L(y):
        return np.abs(np.log(y))

    def logw(y):
        return -p * np.log(y) + q * np.log1p(L(y))

    def dlogw(y):
        # valid on (0, 1], where |log y| = -log y
        return -(p + q / (1 + L(y))) / y

    def d2logw(y):
        Ly = L(y)
        return (p + q / (1 + Ly)) / y ** 2 - q / ((1 + Ly) ** 2 * y ** 2)

    def w(y):
        with np.errstate(over="ignore"):
            return np.exp(logw(y))

    return Weight(
        w=w, dw=lambda y: w(y) * dlogw(y),
        d2w=lambda y: w(y) * (d2logw(y) + dlogw(y) ** 2),
        family="power_log", params={"p": p, "q": q},
        logw=logw, dlogw=dlogw, d2logw=d2logw)


def exp_inv(a=1.0):
    """e^(a/y) / e^a."""
    a = float(a)

    def w(y):
        with np.errstate(over="ignore"):
            return np.exp(a / y - a)

    return Weight(
        w=w, dw=lambda y: -a / y ** 2 * w(y),
        d2w=lambda y: (a * a / y ** 4 + 2 * a / y ** 3) * w(y),
        family="exp_inv", params={"a": a},
        logw=lambda y: a / y - a, dlogw=lambda y: -a / y ** 2,
        d2logw=lambda y: 2 * a / y ** 3)


def theorem2_weight(n):
    """y^-n (1 + |log y|^(n+1))."""
    m = n + 1

    def L(y):
        return np.abs(np.log(y))

    def logw(y):
        return -n * np.log(y) + np.log1p(L(y) ** m)

    def dlogw(y):
        Ly = L(y)
        return -(n + m * Ly ** (m - 1) / (1 + Ly ** m)) / y

    def d2logw(y):
        Ly = L(y)
        g = m * Ly ** (m - 1) / (1 + Ly ** m)
        # d/dL of g
        dg = (m * (m - 1) * Ly ** (m - 2) * (1 + Ly ** m) - m * m * Ly ** (2 * m - 2)) / (1 + Ly ** m) ** 2
        return (n + g) / y ** 2 + dg / y ** 2

    def w(y):
        with np.errstate(over="ignore"):
            return np.exp(logw(y))

    return Weight(
        w=w, dw=lambda y: w(y) * dlogw(y),
        d2w=lambda y: w(y) * (d2logw(y) + dlogw(y) ** 2),
        family="theorem2_weight", params={"n": n},
        logw=logw, dlogw=dlogw, d2logw=d2logw)


def shifted_power(c, b, s):
    """c (y + b)^s with s < 0 and y + b > 0."""
    c, b, s = float(c), float(b), float(s)
    return Weight(
        w=lambda y: c * (y + b) ** s, dw=lambda y: c * s * (y + b) ** (s - 1),
        d2w=lambda y: c * s * (s - 1) * (y + b) ** (s - 2),
        family="shifted_power", params={"c": c, "b": b, "s": s},
        logw=lambda y: math.log(c) + s * np.log(y + b), dlogw=lambda y: s / (y + b),
        d2logw=lambda y: -s / (y + b) ** 2)


def constant():
    """w = 1: not decreasing, kept as the boundary case of the integral condition."""
    return Weight(
        w=lambda y: np.ones_like(y), dw=lambda y: np.zeros_like(y),
        d2w=lambda y: np.zeros_like(y), family="constant",
        logw=lambda y: np.zeros_like(y), dlogw=lambda y: np.zeros_like(y),
        d2logw=lambda y: np.zeros_like(y))


def custom(w, dw, d2w=None, family="custom", params=None):
    """User-supplied weight, rescaled so that w(1) = 1."""
    w1 = float(w(np.float64(1.0)))
    if not (w1 > 0 and math.isfinite(w1)):
        raise DomainError("custom weight must be positive and finite at y = 1")
    c = 1.0 / w1
    return Weight(
        w=lambda y: c * w(y), dw=lambda y: c * dw(y),
        d2w=None if d2w is None else (lambda y: c * d2w(y)),
        family=family, params=dict(params or {}), scale=c)


FAMILIES = {
    "power": (power, ("p",)),
    "power_log": (power_log, ("p", "q")),
    "exp_inv": (exp_inv, ("a",)),
    "threshold": (threshold, ("n",)),
    "theorem2_weight": (theorem2_weight, ("n",)),
    "shifted_power": (shifted_power, ("c", "b", "s")),
    "constant": (constant, ()),
}


def parse_weight_spec(spec: str, n: int | None = None) -> Weight:
    """Build a weight from ``"family=power p=4"`` style text.

    ``threshold`` and ``theorem2_weight`` take their exponent from ``n``
    unless given explicitly.
    """
    tokens = shlex.split(spec)
    kv = {}
    for tok in tokens:
        if "=" not in tok:
            raise DomainError(f"malformed weight token {tok!r} (expected key=value)")
        k, v = tok.split("=", 1)
        kv[k.strip()] = v.strip()
    fam = kv.pop("family", None)
    if fam not in FAMILIES:
        raise DomainError(f"unknown weight family {fam!r}; known: {sorted(FAMILIES)}")
    builder, names = FAMILIES[fam]
    if fam in ("threshold", "theorem2_weight") and "n" not in kv:
        if n is None:
            raise DomainError(f"family {fam} needs n")
        kv["n"] = str(n)
    unknown = set(kv) - set(names)
    if unknown:
        raise DomainError(f"unknown parameter(s) {sorted(unknown)} for family {fam}")
    missing = [k for k in names if k not in kv]
    if missing:
        raise DomainError(f"missing parameter(s) {missing} for family {fam}")
    args = []
    for k in names:
        try:
            v = float(kv[k])
        except ValueError:
            raise DomainError(f"parameter {k}={kv[k]!r} is not a number") from None
        args.append(int(v) if k == "n" else v)
    return builder(*args)


# ----------------------------------------------------------------------
# regularity conditions


def default_grid(count=200, ymin=1e-6):
    return np.logspace(math.log10(ymin), 0.0, count)


@dataclass
class RegularityReport:
    als_pass: bool
    als_sup: float
    ar_delta: float
    ar_delta_near0: float
    ar_min_ratio_prime: float
    near0_cutoff: float
    poly_growth: Optional[tuple]
    rippon_I0: float
    rippon_divergent: bool
    borichev_class: str
    borichev_limit: float
    borichev_slope: float
    grid_min: float
    grid_max: float
    grid_count: int

    @property
    def delta_for_lemmas(self):
        """Global delta when positive, else the near-0 one."""
        return self.ar_delta if self.ar_delta > 0 else self.ar_delta_near0

    @property
    def theorem1_hypotheses(self):
        return bool(self.als_pass and self.ar_delta > 0)


def _delta_from(rp, n):
    return float(np.clip(1.0 + n * np.min(rp), 0.0, 1.0))


def borichev_classify(weight, n, t_lo=5.0, t_hi=25.0, count=81):
    """Classify by the behaviour of psi(t) = log w(e^-t) on [t_lo, t_hi].

    Returns (class, limit of psi', slope of log|psi''| vs log psi').
    """
    t = np.linspace(t_lo, t_hi, count)
    p1 = weight.psi1(t)
    p2 = weight.psi2(t)
    slope = float("nan")
    if p1[-1] > 100 and p1[-1] > 10 * p1[0]:
        mask = np.abs(p2) > 0
        slope = float(np.polyfit(np.log(p1[mask]), np.log(np.abs(p2[mask])), 1)[0])
        cls = "rapid" if slope <= 2 - 0.05 else "neither"
        return cls, float("inf"), slope
    # psi' ~ L + c1/t + c2/t^2
    A = np.stack([np.ones_like(t), 1 / t, 1 / t ** 2], axis=1)
    limit = float(np.linalg.lstsq(A, p1, rcond=None)[0][0])
    cls = "polynomial" if limit > n + 1e-3 and math.isfinite(limit) else "neither"
    return cls, limit, slope


def check_conditions(n, weight, grid=None, near0_cutoff=0.1, with_rippon=True):
    """Sample every regularity condition of ``weight`` on ``grid``."""
    grid = default_grid() if grid is None else np.asarray(grid, float)
    if grid.size < 50:
        raise DomainError("check_conditions needs at least 50 grid points")
    if np.any(grid <= 0) or np.any(grid > 1):
        raise DomainError("grid must lie in (0, 1]")
    grid = np.sort(grid)
    l1 = weight.ell1(grid)
    if np.any(~(l1 < 0)):
        bad = float(grid[np.argmax(~(l1 < 0))])
        raise MonotonicityError(f"weight is not strictly decreasing at y = {bad:.6g}")
    ratio = np.abs(1.0 / l1)
    ylow = 10 * grid[0]
    als_sup = float(np.max(ratio[grid <= ylow]))
    als_pass = bool(als_sup <= math.sqrt(ylow))
    rp = weight.ratio_prime(grid)
    ar_delta = _delta_from(rp, n)
    near = grid <= near0_cutoff
    ar_near = _delta_from(rp[near], n) if np.any(near) else float("nan")
    slope_y = -grid * l1
    eps = float(np.min(slope_y)) - n
    poly = (float(np.max(slope_y)), eps) if eps > 0 else None
    I0 = rippon_integral(n, weight) if with_rippon else float("nan")
    cls, limit, bslope = borichev_classify(weight, n)
    return RegularityReport(
        als_pass=als_pass, als_sup=als_sup, ar_delta=ar_delta, ar_delta_near0=ar_near,
        ar_min_ratio_prime=float(np.min(rp)), near0_cutoff=near0_cutoff,
        poly_growth=poly, rippon_I0=I0, rippon_divergent=not math.isfinite(I0),
        borichev_class=cls, borichev_limit=limit, borichev_slope=bslope,
        grid_min=float(grid[0]), grid_max=float(grid[-1]), grid_count=int(grid.size))


def rippon_integral(n, weight, rtol=1e-10, s_max=640.0):
    """I0 = int_0^1 (w(t)/t)^(1/(n+1)) dt, or inf when divergent.

    With t = e^-s the integrand becomes exp(E(s)), E = (log w(e^-s) - n s)/(n+1).
    The integral over [0, S] is extended by an exponential tail fitted at S;
    S doubles until the extended value settles.  A non-decaying tail, or
    totals that keep growing up to ``s_max``, mean divergence.
    """
    def E(s):
        with np.errstate(over="ignore", invalid="ignore"):
            return (weight.log(np.exp(-s)) - n * s) / (n + 1)

    def g(s):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(E(s))

    S = 32.0
    partial = 0.0
    done = 0.0
    totals = []
    while S <= s_max:
        panels = int(S - done)
        s, ws = composite_unit(panels)
        x = done + (S - done) * s
        vals = g(x)
        if not np.all(np.isfinite(vals)):
            return float("inf")
        partial += float(np.dot(ws * (S - done), vals))
        done = S
        e1, e0 = float(E(np.array(S))), float(E(np.array(S - 1.0)))
        rate = e0 - e1
        if not math.isfinite(e1):
            return float("inf")
        tail = math.exp(e1) / rate if rate > 1e-12 else float("inf")
        total = partial + tail
        totals.append(total)
        if len(totals) >= 2 and math.isfinite(total) and \
                abs(totals[-1] - totals[-2]) <= rtol * abs(total):
            return total
        S *= 2
    finite = [x for x in totals if math.isfinite(x)]
    if not finite or len(finite) < len(totals) or \
            (len(totals) >= 3 and totals[-1] > totals[-2] > totals[-3]):
        return float("inf")
    raise AccuracyError("rippon integral: no convergence or divergence verdict",
                        tuple(totals[-2:]))


@dataclass
class DoublingRecord:
    theta: float
    alpha: float
    pass_quarter: bool
    pass_doubling: bool
    ratio: float


def verify_lemma_doubling(weight, theta):
    """alpha <= theta/4 and w(theta - 2 alpha) <= 2 w(theta)."""
    if not (0 < theta <= 0.5):
        raise DomainError("theta must lie in (0, 1/2]")
    a = weight.alpha(theta)
    if theta - 2 * a <= 0:
        raise DomainError(f"theta - 2 alpha = {theta - 2 * a:.3g} <= 0")
    r = weight.ratio_to(theta - 2 * a, theta)
    return DoublingRecord(theta, a, a <= theta / 4, r <= 2.0, r)


@dataclass
class WeightedIntegralRecord:
    theta: float
    delta: float
    lhs: float
    rhs: float
    slack: float
    passed: bool


def shifted_integral(n, weight, theta, rtol=1e-11, log_norm=None):
    """int_0^1 (w(y(1-theta)+theta)/y)^(1/(n+1)) dy divided by exp(log_norm/(n+1)).

    Computed with y = u^(n+1), which removes the y^(-1/(n+1)) endpoint
    singularity; the rule is graded towards u = 0 at the scale where w
    starts to drop.
    """
    if log_norm is None:
        log_norm = weight.log(theta)
    a = float(weight.alpha(min(max(theta, 1e-300), 0.999999)))
    h = max(min(a, 1.0), 1e-300) ** (1.0 / (n + 1))

    def f(u):
        y = u ** (n + 1)
        with np.errstate(over="ignore"):
            lw = weight.log(theta + y * (1 - theta))
            return (n + 1) * u ** (n - 1) * np.exp((lw - log_norm) / (n + 1))

    return integrate(f, 0.0, 1.0, focus=0.0, scale=h, rtol=rtol, atol=1e-300)


def verify_weighted_integral_bound(n, weight, theta, delta):
    """Check the weighted integral bound with constant (n+1)/n + 40(n+1)/delta."""
    if not (0 < theta <= 0.5):
        raise DomainError("theta must lie in (0, 1/2]")
    if not delta > 0:
        raise DomainError("delta must be positive")
    lw = weight.log(theta)
    lhs_n = shifted_integral(n, weight, theta, log_norm=lw)
    a = weight.alpha(theta)
    const = (n + 1) / n + 40 * (n + 1) / delta
    rhs_n = const * a ** (n / (n + 1))
    kappa = math.exp(lw / (n + 1))
    return WeightedIntegralRecord(theta, delta, lhs_n * kappa, rhs_n * kappa,
                                  rhs_n / lhs_n, lhs_n <= rhs_n)


def patch_weight(weight, y0, n=None):
    """C^2 patch: A*w on (0, y1], c (y + b)^s on [y1, 1], with w(1) = 1.

    y1 is the largest point <= y0 with (w/w')'(y1) < 0.  (b, s) match the
    first and second log-derivatives at y1, c normalises w(1) = 1 and A
    matches the value.
    """
    if not (0 < y0 <= 1):
        raise DomainError("y0 must lie in (0, 1]")
    cands = np.concatenate([[y0], y0 * np.logspace(0, -6, 121)[1:]])
    y1 = None
    for y in cands:
        if weight.ratio_prime(y) < 0 and weight.ell2(y) > 0:
            y1 = float(y)
            break
    if y1 is None:
        raise ConstructionError("no y1 <= y0 with (w/w')'(y1) < 0")
    l1, l2 = float(weight.ell1(y1)), float(weight.ell2(y1))
    yb = -l1 / l2
    s = -l1 * l1 / l2
    b = yb - y1
    if not (s < 0 and yb > 0 and 1 + b > 0):
        raise ConstructionError("matching system has no admissible solution")
    logc = -s * math.log1p(b)
    logA = logc + s * math.log(yb) - float(weight.log(y1))
    inner, A = weight, math.exp(logA)
    outer = shifted_power(math.exp(logc), b, s)

    def pick(f_in, f_out, scale_in=1.0):
        def g(y):
            y = _arr(y)
            return np.where(y <= y1, scale_in * f_in(np.minimum(y, y1)),
                            f_out(np.maximum(y, y1)))
        return g

    def logw(y):
        y = _arr(y)
        return np.where(y <= y1, logA + inner.log(np.minimum(y, y1)),
                        outer.logw(np.maximum(y, y1)))

    def w(y):
        with np.errstate(over="ignore"):
            return np.exp(logw(y))

    return Weight(
        w=w, dw=lambda y: w(y) * pick(inner.ell1, outer.dlogw)(y),
        d2w=None, family="patched",
        params={"base": weight.family, **weight.params, "y1": y1, "A": A,
                "c": math.exp(logc), "b": b, "s": s},
        scale=A, logw=logw, dlogw=pick(inner.ell1, outer.dlogw),
        d2logw=pick(inner.ell2, outer.d2logw))
