import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cartwright.errors import AccuracyError, BracketError
from cartwright.quadrature import (bisect_increasing, composite_unit, gauss_legendre,
                                   graded_rule, integrate)


@pytest.mark.parametrize("m", [4, 8, 16])
def test_gauss_legendre_exact_for_polynomials(m):
    x, w = gauss_legendre(m)
    for k in range(2 * m):
        assert np.dot(w, x ** k) == pytest.approx(1 / (k + 1), rel=1e-13)


def test_composite_rule_weights_sum_to_one():
    x, w = composite_unit(7)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all((x > 0) & (x < 1))


def _lorentz_exact(scale, focus):
    return math.atan((1 - focus) / scale) + math.atan(focus / scale)


@given(st.floats(1e-5, 1e-1), st.floats(0.1, 0.9))
def test_integrate_resolves_a_narrow_peak(scale, focus):
    # Lorentzian of width `scale` centred at `focus`: closed-form antiderivative
    f = lambda x: scale / ((x - focus) ** 2 + scale ** 2)
    got = integrate(f, 0.0, 1.0, focus=focus, scale=scale, rtol=1e-12)
    assert got == pytest.approx(_lorentz_exact(scale, focus), rel=1e-9)


@given(st.floats(1e-14, 1e-5), st.floats(0.1, 0.9))
def test_offsets_keep_full_accuracy_below_float_spacing(scale, focus):
    t, w, off = graded_rule(0.0, 1.0, focus=focus, scale=scale, level=1, offsets=True)
    got = np.dot(w, scale / (off ** 2 + scale ** 2))
    assert got == pytest.approx(_lorentz_exact(scale, focus), rel=1e-13)


def test_graded_rule_offsets_are_exact_near_focus():
    t, w, off = graded_rule(0.0, 1.0, focus=0.5, scale=1e-14, offsets=True)
    near = np.abs(off) < 1e-10
    assert near.any()
    assert np.all(np.abs((t[near] - 0.5) - off[near]) <= 1e-16)


def test_integrate_endpoint_singularity():
    got = integrate(lambda x: x ** -0.5, 0.0, 1.0, focus=0.0, scale=1e-200, rtol=1e-12)
    assert got == pytest.approx(2.0, rel=1e-10)


def test_integrate_reports_failure():
    with pytest.raises(AccuracyError):
        integrate(lambda x: np.sin(1e6 * x), 0.0, 1.0, rtol=1e-14, max_levels=2)


@given(st.floats(-5, 5))
def test_bisect_increasing_finds_root(target):
    x = bisect_increasing(math.sinh, target, -10.0, 10.0, rtol=1e-15)
    assert math.sinh(x) == pytest.approx(target, abs=1e-12 * max(1, abs(target)))


def test_bisect_rejects_bad_bracket():
    with pytest.raises(BracketError):
        bisect_increasing(math.exp, -1.0, 0.0, 1.0)
