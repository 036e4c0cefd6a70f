import math

import numpy as np
import pytest

from cartwright import ball as B
from cartwright import verifier as V
from cartwright import weights as W
from cartwright.errors import DomainError, PreconditionError


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_harnack_constant_against_poisson_quotients(n, rng):
    # extremal nonnegative harmonic functions are Poisson kernels
    N, r = n + 1, 0.5
    xi = rng.normal(size=(20000, N))
    xi /= np.linalg.norm(xi, axis=1)[:, None]
    x = np.zeros(N)
    x[0] = r
    quot = np.linalg.norm(x - xi, axis=1) ** N / (1 - r * r)
    C = V.harnack_constant(n)
    assert C == pytest.approx(2 * 1.5 ** n)
    assert quot.max() <= C * (1 + 1e-12)
    assert quot.max() >= 0.99 * C


def test_poisson_test_is_normalised():
    w = W.power(2)
    U = V.make_poisson_test(1, 0.0, 0.05, weight=w)
    assert U(0.3, 1.0) == pytest.approx(0.0, abs=1e-13)
    phis, ys = V.sweep_grid(0.0)
    vals = U(phis[:, None], ys[None, :])
    assert V.envelope_scale(vals, ys, w) <= 1 / 1.1 + 1e-9


def test_poisson_test_n1_closed_form():
    # n = 1, pole at angle 0: the averaged kernel is the mean of two Poisson kernels
    depth, y = 0.05, 0.3
    U = V.make_poisson_test(1, 0.0, depth, weight=W.power(2))
    c = float(U.tag.split("c=")[1].rstrip(")"))
    yy = 1 - (1 - depth) * (1 - y)
    P = yy * (2 - yy) / yy ** 2
    assert U(0.0, y) == pytest.approx(c * (P - 1), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_split_extension_is_linear(n, rng):
    prof = B.AxialBoundaryProfile(lambda t: np.cos(t) + 0.5 * np.cos(3 * t))
    uA, ua = V.split_extension(n, prof, 0.4)
    for _ in range(6):
        p = B.BallPoint(float(rng.uniform(0, math.pi)), float(10 ** rng.uniform(-3, 0)))
        full = B.harmonic_extension_axial(n, prof, p)
        assert uA(p) + ua(p) == pytest.approx(full, abs=1e-8)


def test_split_extension_centre_values():
    uA, _ = V.split_extension(2, B.AxialBoundaryProfile.constant(1.0), 0.7)
    assert uA(B.BallPoint(0.0, 1.0)) == pytest.approx(B.cap_measure(2, 0.7), rel=1e-10)
    uA, _ = V.split_extension(1, B.AxialBoundaryProfile(np.cos), math.pi / 2)
    assert uA(B.BallPoint(0.0, 1.0)) == pytest.approx(1 / math.pi, rel=1e-10)


def test_zero_data_passes_trivially():
    n = 1
    rec = V.verify_cap_average_bound(n, lambda y: -2 * np.log(0.01 + y), 
                                     B.AxialBoundaryProfile.constant(0.0), 0.1)
    assert rec.lhs == 0 and rec.passed
    h = V.harnack_lower_bound(n, V.zero_test(n), W.power(2), 0.1, 0.01)
    assert h.passed and h.ratio == 0


def test_harnack_stage_far_pole():
    n = 1
    w = W.power(2 * n)
    U = V.make_poisson_test(n, math.pi, 0.05, weight=w)
    for theta in (1e-3, 1e-2, 0.1):
        h = V.harnack_lower_bound(n, U, w, theta, float(w.alpha(theta)))
        assert h.passed and h.wav1_pass and h.wav2_pass
        assert abs(h.ratio) < h.C3


def test_harnack_rejects_bad_alpha():
    with pytest.raises(DomainError):
        V.harnack_lower_bound(1, V.zero_test(1), W.power(2), 0.1, 0.05)


def test_dilated_profile_matches_closed_form(rng):
    n, theta = 2, 0.05
    U = V.make_poisson_test(n, 0.3, 0.1, weight=W.power(4))
    prof = U.dilated_profile(theta)
    for _ in range(4):
        a, y = float(rng.uniform(0, math.pi)), float(10 ** rng.uniform(-2, 0))
        ext = B.harmonic_extension_axial(n, prof, B.BallPoint(a, y), rtol=1e-10)
        assert ext == pytest.approx(U(a, theta + y * (1 - theta)), rel=1e-8, abs=1e-10)


def test_scaling_covariance():
    n, c, theta = 1, 37.0, 0.02
    w = W.power(2)
    U = V.make_poisson_test(n, 0.0, 0.05, sign=-1.0, weight=w)
    r1 = V.pipeline_stage(n, "T1", w, U, theta, slack_samples=4)
    r2 = V.pipeline_stage(n, "T1", w.scaled(c), U.scaled(c), theta, slack_samples=4)
    for name in ("cap_average", "C_cap", "K", "C3", "harnack_ratio", "D"):
        assert getattr(r2, name) == pytest.approx(getattr(r1, name), rel=1e-9, abs=1e-15)
    assert (r1.cap_pass, r1.harnack_pass) == (r2.cap_pass, r2.harnack_pass)


def test_upper_bound_violation_reports_location():
    n = 1
    w = W.power(2)
    U = V.make_poisson_test(n, 0.0, 0.05, weight=w).scaled(1e4)
    with pytest.raises(PreconditionError) as info:
        V.pipeline_stage(n, "T1", w, U, 0.1, with_slack=False)
    assert {"phi", "y", "value", "bound"} <= set(info.value.location)


def test_run_pipeline_records_errors_with_theta():
    n = 1
    w = W.power(2)
    U = V.make_poisson_test(n, 0.0, 0.05, weight=w).scaled(1e4)
    rep = V.run_pipeline(n, "T1", w, U, [0.1], with_slack=False)
    assert not rep.passed
    assert rep.records[0].error.startswith("theta=0.1")


@pytest.mark.parametrize("n", [1, 2])
def test_t2prime_d_stage_bound(n):
    w = W.power(n / 2)
    I0 = W.rippon_integral(n, w)
    assert I0 == pytest.approx((n + 1) / (n - n / 2), rel=1e-8)
    for theta in (1e-3, 1e-2, 0.1):
        sd = V.stage_data(n, "T2prime", w, theta, I0)
        assert sd.D <= 2 ** (n / (n + 1)) * I0


def test_t1_pipeline_small_grid(tmp_path):
    n = 1
    w = W.power(2)
    U = V.make_poisson_test(n, 0.0, 0.05, weight=w)
    rep = V.run_pipeline(n, "T1", w, U, V.theta_grid(1e-3, 0.1, 2), slack_samples=6)
    assert rep.passed
    assert all(r.K <= 0.5 for r in rep.records)
    assert all(r.fixed_point_slack <= 1 / 3 for r in rep.records)
    rep.write_csv(tmp_path / "t.csv")
    lines = open(tmp_path / "t.csv").read().splitlines()
    assert lines[0].startswith("theta,beta,D") and len(lines) == len(rep.records) + 1
    d = rep.as_dict()
    assert d["summary"]["pass"] and len(d["records"]) == len(rep.records)


def test_t2_pipeline_on_extremal_example():
    n = 2
    U = V.make_extremal_test(n)
    assert U(0.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    rep = V.run_pipeline(n, "T2", W.theorem2_weight(n), U, [1e-3, 1e-2, 0.1], slack_samples=4)
    assert rep.passed
    ratio = rep.column("harnack_ratio")
    assert np.all(ratio > 0) and np.all(ratio < rep.column("C3"))


def test_theta_grid():
    g = V.theta_grid(1e-3, 0.1, 10)
    assert g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(0.1) and g.size == 21
    with pytest.raises(DomainError):
        V.theta_grid(0.2, 0.1)
