"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` (the lines are also collected
into the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import math

import numpy as np
import pytest

from cartwright import ball as B
from cartwright import cli
from cartwright import extremal as X
from cartwright import surface as S
from cartwright import verifier as V
from cartwright import weights as W

LINES = {}


def report(k, ok, detail):
    line = f"ACCEPTANCE {k:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    LINES[k] = line
    print(line)
    assert ok, line


# 1 ------------------------------------------------------------------

def test_01_kernel_normalisation():
    a, t = np.meshgrid(np.linspace(0, math.pi, 20), np.linspace(0, math.pi, 20))
    worst = max(float(np.max(np.abs(B.averaged_kernel(n, a, np.ones_like(a), t) - 1)))
                for n in (1, 2, 3))
    report(1, worst < 1e-10, f"max |mu(a,1,t) - 1| = {worst:.2e} over 20x20 grid, n=1,2,3")


# 2 ------------------------------------------------------------------

def _lemma1_band(n, level, per_axis=20):
    """Band of quadrature/estimate on a fixed grid, azimuthal rule at ``level``.

    Each level doubles the number of panels of the azimuthal rule.
    """
    ys = np.geomspace(1e-4, 1.0, per_axis)
    a = np.linspace(0.01, math.pi - 0.01, per_axis)
    s = np.linspace(0.0, 1.0, per_axis)
    Y, A, Sx = np.meshgrid(ys, a, s, indexing="ij")
    T = 0.01 + Sx * (A - 0.01)
    q = B.ring_average(n, A, T, Y, level)
    e = B.averaged_kernel(n, A, Y, T, mode="lemma1_estimate")
    r = q / e
    return float(r.min()), float(r.max())


def test_02_lemma1_equivalence():
    details, ok = [], True
    for n in (1, 2, 3):
        lo1, hi1 = _lemma1_band(n, 0)
        lo2, hi2 = _lemma1_band(n, 1)
        move = max(abs(lo2 / lo1 - 1), abs(hi2 / hi1 - 1))
        good = np.isfinite([lo1, hi1, lo2, hi2]).all() and lo1 > 0 and move < 0.05
        ok &= bool(good)
        details.append(f"n={n} band [{lo2:.4g}, {hi2:.4g}] moved {move:.1e}")
    report(2, ok, "; ".join(details))


# 3 ------------------------------------------------------------------

def test_03_extension_exactness():
    rng = np.random.default_rng(42)
    one = B.AxialBoundaryProfile.constant(1.0)
    cos = B.AxialBoundaryProfile(np.cos)
    e_one = e_cos = 0.0
    for n in (1, 2, 3):
        for _ in range(100):
            p = B.BallPoint(float(rng.uniform(0, math.pi)), float(10 ** rng.uniform(-6, 0)))
            e_one = max(e_one, abs(B.harmonic_extension_axial(n, one, p) - 1))
            e_cos = max(e_cos, abs(B.harmonic_extension_axial(n, cos, p)
                                   - (1 - p.y) * math.cos(p.phi)))
    report(3, e_one < 1e-10 and e_cos < 1e-8,
           f"constant err {e_one:.2e}, cos err {e_cos:.2e} at 100 points, n=1,2,3")


# 4 ------------------------------------------------------------------

def test_04_rippon_closed_form():
    worst, flagged = 0.0, True
    for n in (1, 2, 3):
        for a in (0.0, n / 2):
            worst = max(worst, abs(W.rippon_integral(n, W.power(a)) / ((n + 1) / (n - a)) - 1))
        flagged &= W.rippon_integral(n, W.power(n)) == math.inf
    report(4, worst < 1e-6 and flagged,
           f"max rel err {worst:.2e}; divergence at a=n flagged: {flagged}")


# 5 ------------------------------------------------------------------

def test_05_lemma_suites():
    fails = []
    count = 0
    for n in (1, 2, 3):
        for w in (W.power(2 * n), W.exp_inv(1.0), W.power_log(n + 1, 2.0)):
            delta = W.check_conditions(n, w, with_rippon=False).delta_for_lemmas
            for theta in (1e-3, 1e-2, 0.1, 0.5):
                d = W.verify_lemma_doubling(w, theta)
                rec = W.verify_weighted_integral_bound(n, w, theta, delta)
                count += 1
                if not (d.pass_quarter and d.pass_doubling and rec.passed):
                    fails.append((n, w.family, theta))
    report(5, not fails, f"{count - len(fails)}/{count} (n, w, theta) cases pass"
           + (f"; failing {fails}" if fails else ""))


# 6 ------------------------------------------------------------------

def test_06_surface_invariants():
    worst_cont = worst_pi = 0.0
    ok = True
    for n in (1, 2):
        for theta in (1e-2, 0.1):
            kw = V.pipeline_k(n, "T1", W.power(2 * n), theta)
            sf = S.build_surface(n, kw)
            cont = abs(S.gamma_of_y(kw, sf.s, sf.s) - S.gamma_of_y(kw, sf.s, sf.s * (1 - 1e-13)))
            gpi = abs(sf.gamma(sf.rho) - math.pi)
            b = S.verify_surface_bounds(n, kw, sf, sample_count=1000, with_va=False)
            worst_cont, worst_pi = max(worst_cont, cont), max(worst_pi, gpi)
            ok &= bool(cont < 1e-10 and gpi < 1e-8 and sf.s <= kw.lam * kw.beta
                       and b.ylphb_pass and b.sample_count == 1000)
    report(6, ok, f"continuity {worst_cont:.1e}, |gamma(rho)-pi| {worst_pi:.1e}, "
           "s <= lam beta and y <= gamma - beta on 1000 samples, n=1,2, theta=1e-2,0.1")


# 7 ------------------------------------------------------------------

def test_07_lemma4_constants():
    details, ok = [], True
    for n in (1, 2):
        scaled = []
        for lam in (1e-3, 1e-4):
            kw = V.pipeline_k(n, "T1", W.power(2 * n), 1e-2, lam)
            sf = S.build_surface(n, kw)
            _, va0 = S.build_va(n, kw, sf)
            scaled.append(va0 / lam ** (1 / (n + 1)))
        spread = max(scaled) / min(scaled)
        kw = V.pipeline_k(n, "T1", W.power(2 * n), 1e-2)
        sf = S.build_surface(n, kw)
        b = S.verify_surface_bounds(n, kw, sf, sample_count=1000)
        good = spread < 3 and np.isfinite(b.mu_over_k_max) and b.va_over_k_min > 0
        ok &= bool(good)
        details.append(f"n={n} va0/lam^(1/(n+1)) = {scaled[0]:.3g}, {scaled[1]:.3g} "
                       f"(ratio {spread:.3f}); mu/k <= {b.mu_over_k_max:.3g}; "
                       f"va/k >= {b.va_over_k_min:.3g}")
    report(7, ok, "; ".join(details))


# 8 ------------------------------------------------------------------

def test_08_theorem1_end_to_end():
    details, ok = [], True
    for n in (1, 2):
        w = W.power(2 * n)
        thetas = V.theta_grid(1e-3, 0.3, 10)
        for sign in (1.0, -1.0):
            U = V.make_poisson_test(n, 0.0, 0.05, sign=sign, weight=w)
            rep = V.run_pipeline(n, "T1", w, U, thetas, slack_samples=8)
            c3 = rep.column("C3")
            th = rep.column("theta")
            low = c3[th <= 0.03]
            spread = float(low.max() / low.min())
            ok &= bool(rep.passed and spread < 10)
            details.append(f"n={n} sign={sign:+.0f}: {rep.passed}, C3 in "
                           f"[{c3.min():.3g}, {c3.max():.3g}], spread {spread:.3f}")
    report(8, ok, "; ".join(details))


# 9 ------------------------------------------------------------------

def test_09_extremal_example():
    details, ok = [], True
    for n in (2, 3):
        sol = X.build_cascade(n)
        rec = X.verify_example(sol)
        good = (rec.cascade_residual_max < 1e-7 and 3.5 <= rec.pde_convergence_ratio <= 4.5
                and abs(rec.log_exponent_fit - (n + 1)) <= 0.15)
        ok &= bool(good)
        details.append(f"n={n} cascade {rec.cascade_residual_max:.1e}, PDE ratio "
                       f"{rec.pde_convergence_ratio:.3f}, exponent {rec.log_exponent_fit:.3f}")
    n1 = X.n1_report()["verbatim"]["laplacian_residual_max"]
    ok &= n1 < 1e-8
    details.append(f"n=1 Laplacian residual {n1:.1e}")
    report(9, ok, "; ".join(details))


# 10 -----------------------------------------------------------------

INVOCATIONS = [
    ["verify", "--n", "1", "--theta-min", "1e-3", "--theta-max", "0.1", "--per-decade", "2"],
    ["verify", "--n", "1", "--theorem", "T2prime", "--theta-min", "1e-2", "--theta-max", "0.1",
     "--per-decade", "2"],
    ["verify", "--n", "2", "--theorem", "T2", "--theta-min", "1e-2", "--theta-max", "0.1",
     "--per-decade", "2", "--slack-samples", "4"],
    ["example", "--n", "1"],
    ["example", "--n", "2"],
    ["example", "--n", "3"],
]


def test_10_determinism(tmp_path):
    same = 0
    for i, argv in enumerate(INVOCATIONS):
        bodies = []
        for rep in range(2):
            out = tmp_path / f"r{i}_{rep}.json"
            cli.main([*argv, "--out", str(out)])
            bodies.append(out.read_bytes())
        same += bodies[0] == bodies[1]
    report(10, same == len(INVOCATIONS),
           f"{same}/{len(INVOCATIONS)} verify/example invocations byte-identical on repeat")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
