"""End-to-end checks of the two-sided growth estimates on test functions.

Each pipeline stage is a function returning a record; ``run_pipeline``
chains the cap-average lower bound and the Harnack stage over a grid of
depths theta and aggregates the measured constants.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .ball import (AxialBoundaryProfile, BallPoint, averaged_kernel, cap_average,
                   cap_measure, check_dimension, harmonic_extension_axial)
from .errors import CartwrightError, DomainError, PreconditionError
from .quadrature import integrate
from .surface import (NormalizedWeightK, build_surface, build_va, surface_samples)
from . import weights as W

DEFAULT_LAMBDA = min(1 / (3 * math.pi), 1e-2)
HEADROOM = 1.1


def harnack_constant(n, r=0.5):
    """Sharp Harnack ratio sup h(0)/h(x) for |x| = r R, N = n + 1."""
    N = n + 1
    return (1 + r) ** (N - 1) / (1 - r)


# ----------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class HarmonicTestFunction:
    """Axially symmetric harmonic U with ``U(0) = 0``.

    ``evaluator(phi, y)`` is vectorised over broadcast arrays; ``envelope``
    is a weight with U <= envelope(y) on the sweep grid.  ``breakpoints`` is
    a tuple of angles or a callable of the dilation depth returning one.
    """

    n: int
    evaluator: Callable
    envelope: W.Weight
    tag: str = "custom"
    breakpoints: tuple = ()

    def __call__(self, phi, y):
        out = np.asarray(self.evaluator(np.asarray(phi, float), np.asarray(y, float)), float)
        return float(out) if out.ndim == 0 else out

    def at(self, p: BallPoint):
        return self(p.phi, p.y)

    def dilated_profile(self, theta):
        """Boundary values of z -> U(z (1 - theta))."""
        bps = self.breakpoints(theta) if callable(self.breakpoints) else self.breakpoints
        return AxialBoundaryProfile(lambda t: self.evaluator(t, np.full(np.shape(t), float(theta))),
                                    tuple(bps))

    @property
    def profile(self):
        return self.dilated_profile(0.0)

    def scaled(self, c):
        f = self.evaluator
        return HarmonicTestFunction(self.n, lambda p, y: c * f(p, y), self.envelope.scaled(c),
                                    self.tag, self.breakpoints)


def sweep_grid(pole=None, n_phi=181, n_y=61, ymin=1e-6):
    phis = np.linspace(0.0, math.pi, n_phi)
    if pole is not None:
        phis = np.unique(np.concatenate([phis, [pole]]))
    return phis, np.concatenate([np.logspace(math.log10(ymin), 0.0, n_y)])


def envelope_scale(values, ys, weight):
    """max over the grid of U / w, with values shaped (n_phi, n_y)."""
    return float(np.max(np.max(values, axis=0) / weight(ys)))


def make_poisson_test(n, pole_angle, depth, sign=1.0, weight=None, grid=None):
    """c*sign*(P(z(1-depth), pole) - 1), averaged about the eta axis.

    The average over rotations about the axis keeps the function harmonic
    and makes it axially symmetric; its value at (phi, y) is the averaged
    kernel seen from depth 1 - (1-depth)(1-y).  ``c`` is set so that the
    swept maximum of U/weight is 1/1.1.
    """
    n = check_dimension(n)
    if not (0 < depth < 1):
        raise DomainError("depth must lie in (0, 1)")
    if not (0 <= pole_angle <= math.pi):
        raise DomainError("pole_angle must lie in [0, pi]")
    weight = W.threshold(n) if weight is None else weight
    r = 1.0 - depth

    def raw(phi, y):
        phi, y = np.broadcast_arrays(np.asarray(phi, float), np.asarray(y, float))
        yy = 1.0 - r * (1.0 - y)
        return sign * (averaged_kernel(n, phi, yy, np.full(phi.shape, float(pole_angle))) - 1.0)

    phis, ys = sweep_grid(pole_angle) if grid is None else grid
    vals = np.asarray(raw(phis[:, None], ys[None, :]))
    m = envelope_scale(vals, ys, weight)
    if m <= 0:
        c = 1.0
    else:
        c = 1.0 / (HEADROOM * m)

    def ev(phi, y):
        return c * np.asarray(raw(phi, y))

    return HarmonicTestFunction(n, ev, weight, f"poisson(pole={pole_angle:g}, depth={depth:g}, "
                                f"sign={sign:+g}, c={c:.17g})")


def make_extremal_test(n, solution=None, weight=None, grid=None):
    """c (V(1 - z) - V(eta)) for the log-polynomial example V.

    ``1 - z`` is read in polar coordinates about the axis through eta (see
    ``extremal.ball_to_polar``).  ``c`` puts the swept maximum of U/weight at
    1/1.1, with the weight y^-n (1 + |log y|^(n+1)) by default.
    """
    from . import extremal as X
    sol = X.build_cascade(n) if solution is None else solution
    n = sol.n
    weight = W.theorem2_weight(n) if weight is None else weight
    v0 = float(X.assemble_V(sol, 1.0, 0.0))

    def raw(phi, y):
        rho, ang = X.ball_to_polar(phi, y)
        return X.assemble_V(sol, rho, ang) - v0

    phis, ys = sweep_grid() if grid is None else grid
    vals = np.asarray(raw(phis[:, None], ys[None, :]))
    m = envelope_scale(vals, ys, weight)
    c = 1.0 / (HEADROOM * m) if m > 0 else 1.0

    def ev(phi, y):
        return c * np.asarray(raw(phi, y))

    return HarmonicTestFunction(n, ev, weight, f"extremal(n={n}, c={c:.17g})",
                                _geometric_breakpoints)


def _geometric_breakpoints(theta):
    # the boundary data of the dilated example vary on the scale theta near t = 0
    if theta <= 0:
        return ()
    return tuple(float(b) for b in theta * 2.0 ** np.arange(0, 40) if b < math.pi / 2)


def zero_test(n, weight=None):
    weight = W.threshold(n) if weight is None else weight
    return HarmonicTestFunction(n, lambda p, y: np.zeros(np.broadcast(p, y).shape), weight, "zero")


# ----------------------------------------------------------------------
# stage records


def split_extension(n, profile, beta):
    """Extensions of profile*chi_cap and profile*chi_complement."""
    if not (0 < beta <= math.pi / 2):
        raise DomainError("beta must lie in (0, pi/2]")
    pA = profile.masked(0.0, beta)
    pa = profile.masked(beta, math.pi)

    def uA(p, **kw):
        return harmonic_extension_axial(n, pA, p, **kw)

    def ua(p, **kw):
        return harmonic_extension_axial(n, pa, p, **kw)

    uA.profile, ua.profile = pA, pa
    return uA, ua


@dataclass
class CapAverageRecord:
    beta: float
    D: float
    k0_beta_n: float
    lhs: float
    rhs: float
    C_measured: float
    C_ref: float
    K: float
    lam: float
    lambda_halvings: int
    va0: float
    C_sf2: float
    fixed_point_slack: float
    passed: bool


def _normalised_k(n, logk_tilde, lam, denom, beta, D):
    logc = math.log(lam / denom)
    logk = lambda y: logc + logk_tilde(np.asarray(y, float))
    return NormalizedWeightK(n, lambda y: np.exp(logk(y)), lam, beta, logk=logk,
                             D_bound=D * math.exp(logc / (n + 1)))


def fixed_point_slack(n, profile, logk_tilde, beta, D, denom, lam, K, samples=16, seed=42):
    """(v_a(0), C_sf2, C_sf2 v_a(0)) for the normalised data at this lambda.

    C_sf2 is the largest sampled u_a / ((1+K) v_a) on the surface, so the
    fixed point argument needs C_sf2 v_a(0) <= 1/3.
    """
    kw = _normalised_k(n, logk_tilde, lam, denom, beta, D)
    sf = build_surface(n, kw, count=4000)
    va_prof, va0 = build_va(n, kw, sf)
    scale = lam / denom
    pa = profile.masked(beta, math.pi)
    ys = surface_samples(sf, samples, seed)
    gs = np.minimum(sf.gamma(ys), math.pi)
    worst = 0.0
    for g, y in zip(gs, ys):
        p = BallPoint(float(g), float(y))
        va = harmonic_extension_axial(n, va_prof, p, rtol=1e-8, atol=1e-300)
        ua = scale * harmonic_extension_axial(n, pa, p, rtol=1e-8, atol=1e-300)
        worst = max(worst, ua / ((1 + max(K, 0.0)) * va))
    return va0, worst, worst * va0


def verify_cap_average_bound(n, logk_tilde, profile, beta, *, D=None, lam=DEFAULT_LAMBDA,
                             slack_samples=16, max_halvings=6, seed=42, with_slack=True):
    """Cap-average lower bound with C_ref = 1/(2 lam).

    ``logk_tilde`` is log of the majorant k~, ``profile`` the boundary data
    of u~.  The record carries K = -u_A(0) for the data normalised by
    lam / (D^(n+1) + k~(0) beta^n); the bound holds exactly when K <= 1/2.
    """
    n = check_dimension(n)
    if D is None:
        m = n + 1
        D = integrate(lambda u: m * u ** (n - 1) * np.exp(logk_tilde(u ** m) / m),
                      0.0, 1.0, focus=0.0, scale=1e-3, rtol=1e-11, atol=1e-300)
    k0b = math.exp(float(logk_tilde(np.array(0.0))) + n * math.log(beta))
    denom = D ** (n + 1) + k0b
    lhs = cap_average(n, profile, beta)
    C_meas = max(0.0, -lhs) / denom
    halvings = 0
    va0 = csf2 = slack = float("nan")
    while True:
        K = -lam * lhs / denom
        if not with_slack:
            break
        va0, csf2, slack = fixed_point_slack(n, profile, logk_tilde, beta, D, denom, lam, K,
                                             slack_samples, seed)
        if slack <= 1 / 3 or halvings >= max_halvings:
            break
        lam *= 0.5
        halvings += 1
    C_ref = 1 / (2 * lam)
    rhs = -C_ref * denom
    return CapAverageRecord(beta, D, k0b, lhs, rhs, C_meas, C_ref, K, lam, halvings, va0, csf2,
                            slack, bool(lhs >= rhs))


@dataclass
class HarnackRecord:
    theta: float
    alpha: float
    C1_measured: float
    C2_measured: float
    C1: float
    C2: float
    C3: float
    value: float
    lower_bound: float
    ratio: float
    wav1_pass: bool
    wav2_pass: bool
    passed: bool


def harnack_lower_bound(n, U: HarmonicTestFunction, w, theta, alpha, C1=None, C2=None):
    """U(eta, theta) >= -C3 w(theta) from (wav.1), (wav.2) and Harnack."""
    if not (0 < theta < 0.5 + 1e-12):
        raise DomainError("theta must lie in (0, 1/2)")
    if not (0 < alpha <= theta / 4 * (1 + 1e-12)):
        raise DomainError("alpha must lie in (0, theta/4]")
    wt = float(w(theta))
    C1m = float(w.ratio_to(theta - 2 * alpha, theta))
    cap = cap_average(n, U.dilated_profile(theta), alpha)
    C2m = abs(cap) / (alpha ** n * wt)
    C1v = C1m if C1 is None else C1
    C2v = C2m if C2 is None else C2
    ok1 = C1m <= C1v * (1 + 1e-12)
    ok2 = C2m <= C2v * (1 + 1e-12)
    CH = harnack_constant(n)
    C3 = CH * C2v * alpha ** n / cap_measure(n, alpha) + (CH - 1) * C1v
    val = float(U(0.0, theta))
    lb = -C3 * wt
    return HarnackRecord(theta, alpha, C1m, C2m, C1v, C2v, C3, val, lb, -val / wt,
                         bool(ok1), bool(ok2), bool(ok1 and ok2 and val >= lb))


# ----------------------------------------------------------------------
# pipelines


@dataclass
class ThetaRecord:
    theta: float
    beta: float
    D: float
    D_bound: float
    k0_beta_n: float
    cap_average: float
    rhs: float
    C_cap: float
    K: float
    lam: float
    fixed_point_slack: float
    C1: float
    C2: float
    C3: float
    U_eta_theta: float
    harnack_ratio: float
    cap_pass: bool
    harnack_pass: bool
    error: Optional[str] = None


@dataclass
class VerificationReport:
    theorem: str
    n: int
    weight: str
    test_function: str
    lam: float
    records: list = field(default_factory=list)

    @property
    def passed(self):
        return bool(self.records) and all(r.cap_pass and r.harnack_pass and r.error is None
                                          for r in self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], float)

    def summary(self):
        ok = [r for r in self.records if r.error is None]
        c3 = np.array([r.C3 for r in ok]) if ok else np.array([np.nan])
        cc = np.array([r.C_cap for r in ok]) if ok else np.array([np.nan])
        return {"pass": self.passed, "theta_count": len(self.records),
                "C3_max": float(np.max(c3)), "C3_min": float(np.min(c3)),
                "C_cap_max": float(np.max(cc)),
                "K_max": float(max((r.K for r in ok), default=float("nan")))}

    def as_dict(self):
        return {"theorem": self.theorem, "n": self.n, "weight": self.weight,
                "test_function": self.test_function, "lambda": self.lam,
                "records": [asdict(r) for r in self.records], "summary": self.summary()}

    def write_csv(self, path):
        names = list(ThetaRecord.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(names)
            for r in self.records:
                wr.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in (getattr(r, k) for k in names)])


def theta_grid(theta_min=1e-3, theta_max=0.3, per_decade=20):
    if not (0 < theta_min < theta_max <= 0.5):
        raise DomainError("need 0 < theta_min < theta_max <= 1/2")
    count = max(2, int(round(per_decade * math.log10(theta_max / theta_min))) + 1)
    return np.geomspace(theta_min, theta_max, count)


def check_upper_bound(U, logk_tilde, log_scale, theta, n_phi=37, n_y=25):
    """u~(x, y) <= k~(y): U at depth theta + y(1-theta) against scale * k~(y)."""
    phis = np.linspace(0.0, math.pi, n_phi)
    ys = np.concatenate([[0.0], np.logspace(-6, 0, n_y - 1)])
    vals = U(phis[:, None], (theta + ys * (1 - theta))[None, :])
    bound = np.exp(logk_tilde(ys) + log_scale)
    excess = vals - bound[None, :] * (1 + 1e-9) - 1e-12
    if np.any(excess > 0):
        i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
        raise PreconditionError("upper bound u~ <= k~ fails",
                                {"phi": float(phis[i]), "y": float(ys[j]),
                                 "value": float(vals[i, j]), "bound": float(bound[j])})


@dataclass(frozen=True)
class StageData:
    """Per-theta inputs of the cap-average and Harnack stages."""

    alpha: float
    beta: float
    log_norm: float
    logk: Callable = field(repr=False)
    D: float
    D_bound: float
    hweight: W.Weight = field(repr=False)


def stage_data(n, theorem, weight, theta, I0=None):
    """alpha, beta, the majorant log k~, D and the Harnack weight for one theta."""
    if theorem == "T1":
        alpha = float(weight.alpha(theta))
        beta = alpha
        log_norm = float(weight.log(theta)) + n * math.log(alpha)
        logk = lambda y: weight.log(theta + np.asarray(y, float) * (1 - theta)) - log_norm
        D = W.shifted_integral(n, weight, theta, log_norm=log_norm)
        D_bound = (n + 1) / n + 40 * (n + 1) / max(
            W.check_conditions(n, weight, with_rippon=False).delta_for_lemmas, 1e-300)
        hweight = weight
    elif theorem == "T2prime":
        alpha = beta = theta / 4
        log_norm = 0.0
        logk = lambda y: weight.log(theta + np.asarray(y, float) * (1 - theta))
        D = W.shifted_integral(n, weight, theta, log_norm=0.0)
        I0 = W.rippon_integral(n, weight) if I0 is None else I0
        D_bound = 2 ** (n / (n + 1)) * I0
        hweight = W.power(n).scaled(I0 ** (n + 1))
    elif theorem == "T2":
        alpha = beta = theta / 4
        log_norm = 0.0
        logk = lambda y: -n * np.log(theta + np.asarray(y, float) * (1 - theta))
        base = W.threshold(n)
        D = W.shifted_integral(n, base, theta, log_norm=0.0)
        D_bound = n / (n + 1) + (1 - theta) ** (-n / (n + 1)) * abs(math.log(theta))
        hweight = W.theorem2_weight(n)
    else:
        raise DomainError(f"unknown theorem {theorem!r}")
    return StageData(alpha, beta, log_norm, logk, D, D_bound, hweight)


def pipeline_k(n, theorem, weight, theta, lam=DEFAULT_LAMBDA):
    """The normalised weight k the surface construction sees at this theta."""
    sd = stage_data(n, theorem, weight, theta)
    k0b = math.exp(float(sd.logk(np.array(0.0))) + n * math.log(sd.beta))
    return _normalised_k(n, sd.logk, lam, sd.D ** (n + 1) + k0b, sd.beta, sd.D)


def pipeline_stage(n, theorem, weight, U, theta, lam=DEFAULT_LAMBDA, I0=None,
                   with_slack=True, slack_samples=16):
    """One theta of a pipeline; returns a ThetaRecord."""
    sd = stage_data(n, theorem, weight, theta, I0)
    alpha, beta, log_norm, logk, D = sd.alpha, sd.beta, sd.log_norm, sd.logk, sd.D
    D_bound, hweight = sd.D_bound, sd.hweight
    check_upper_bound(U, logk, log_norm, theta)
    scale = math.exp(-log_norm)
    base_prof = U.dilated_profile(theta)
    prof = AxialBoundaryProfile(lambda t: scale * base_prof(t), base_prof.breakpoints)
    cap = verify_cap_average_bound(n, logk, prof, beta, D=D, lam=lam,
                                   with_slack=with_slack, slack_samples=slack_samples)
    h = harnack_lower_bound(n, U, hweight, theta, alpha)
    return ThetaRecord(theta, beta, D, D_bound, cap.k0_beta_n, cap.lhs, cap.rhs, cap.C_measured,
                       cap.K, cap.lam, cap.fixed_point_slack, h.C1, h.C2, h.C3, h.value,
                       h.ratio, cap.passed, h.passed)


def run_pipeline(n, theorem, weight, U, thetas, lam=DEFAULT_LAMBDA, with_slack=True,
                 slack_samples=16, weight_label=None):
    """Run the chosen pipeline over ``thetas``; stage errors are recorded with theta."""
    n = check_dimension(n)
    I0 = W.rippon_integral(n, weight) if theorem == "T2prime" else None
    rep = VerificationReport(theorem, n, weight_label or weight.family, U.tag, lam)
    for th in thetas:
        try:
            rec = pipeline_stage(n, theorem, weight, U, float(th), lam, I0, with_slack,
                                 slack_samples)
        except CartwrightError as exc:
            nan = float("nan")
            rec = ThetaRecord(float(th), *([nan] * 15), False, False,
                              error=f"theta={th:.6g}: {type(exc).__name__}: {exc}")
        rep.records.append(rec)
    return rep
