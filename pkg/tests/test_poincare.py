import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GRID_A
from oracles import polyline_crossings, rk4_flow
from relpendulum import (
    ForcingSeries,
    PendulumParams,
    StripBound,
    boundary_twist_check,
    curve_intersection_count,
    generating_function,
    poincare_map,
    strip_bound,
    to_momentum,
    twist_margin,
)
from relpendulum.errors import BoundaryTwistError, ParameterError
from relpendulum.integrate import flow
from relpendulum.poincare import (
    generating_function_partials,
    poincare_tangent,
    read_curve_csv,
    twist_at,
    twist_report,
)

TWO_PI = 2 * math.pi
FORCED = PendulumParams(0.2, TWO_PI, 0, ForcingSeries((0.1,)))
UNFORCED = PendulumParams(0.2, TWO_PI)


def test_equilibrium_is_fixed():
    assert poincare_map(UNFORCED, (0.0, 0.0)) == (0.0, 0.0)


def test_drift_cancels_free_velocity():
    with pytest.warns(UserWarning):
        params = PendulumParams(0.0, 4 * math.pi, 1)
    p = to_momentum(0.5)
    s = poincare_map(params, (0.7, p))
    assert s.q == pytest.approx(0.7, abs=1e-12) and s.p == p


def test_forced_map_matches_rk4_oracle():
    q, p = rk4_flow(0.2, TWO_PI, 0, [0.1], [], 0.0, 0.0, 0.0, TWO_PI)
    s = poincare_map(FORCED, (0.0, 0.0))
    assert abs(s.q - q) < 1e-8 and abs(s.p - p) < 1e-8


def test_inadmissible_rejected():
    with pytest.raises(ParameterError, match="inadmissible"):
        poincare_map(PendulumParams(0.2, TWO_PI, 1), (0.0, 0.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, TWO_PI), st.floats(-3, 3), st.integers(-3, 3))
def test_equivariance(q, p, k):
    a = poincare_map(FORCED, (q, p))
    b = poincare_map(FORCED, (q + k * TWO_PI, p))
    assert abs(b.q - a.q - k * TWO_PI) < 1e-9 and abs(b.p - a.p) < 1e-9


def test_free_generating_function(free_params):
    assert generating_function(free_params, 0.4, 0.75) == pytest.approx(-TWO_PI / 1.25, abs=1e-9)
    assert generating_function(free_params, 0.4, 0.75) == generating_function(free_params, 0.4 + TWO_PI, 0.75)


def test_generating_function_angle_derivative():
    params = PendulumParams(0.2, TWO_PI, 0, ForcingSeries((0.1,)))
    h = 1e-5
    fd = (generating_function(params, 0.3 + h, 0.4) - generating_function(params, 0.3 - h, 0.4)) / (2 * h)
    assert abs(fd - generating_function_partials(params, 0.3, 0.4)[0]) < 1e-6


@pytest.mark.parametrize("params", [FORCED, PendulumParams(0.1, 3.0, 0, ForcingSeries((0.2,), (0.0, -0.1)))])
def test_generating_function_grid(params):
    b = strip_bound(params)
    h = 1e-5
    for th in TWO_PI * np.arange(8) / 8:
        for r in np.linspace(-0.8 * b.p_tilde, 0.8 * b.p_tilde, 8):
            v0 = generating_function(params, th, r)
            assert abs(generating_function(params, th + TWO_PI, r) - v0) < 1e-8
            vt, vr = generating_function_partials(params, th, r)
            fd_t = (generating_function(params, th + h, r) - generating_function(params, th - h, r)) / (2 * h)
            fd_r = (generating_function(params, th, r + h) - generating_function(params, th, r - h)) / (2 * h)
            assert abs(fd_t - vt) < 1e-5 and abs(fd_r - vr) < 1e-5


def test_symplectic_on_strip_random_params():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        T = rng.uniform(2, 8)
        a = rng.uniform(0.01, math.pi**2 / T**2)
        params = PendulumParams(a, T, 0, ForcingSeries((rng.uniform(-0.3, 0.3),)))
        b = strip_bound(params)
        for q in TWO_PI * np.arange(16) / 16:
            for p in np.linspace(-b.p_tilde, b.p_tilde, 16):
                worst = max(worst, abs(poincare_tangent(params, (q, p)).det - 1))
    assert worst < 1e-8


def test_strip_bound_unforced():
    b = strip_bound(UNFORCED)
    assert b.p_hat == 0.0
    assert b.p_tilde == pytest.approx(0.4 * math.pi + 1, abs=1e-14)


def test_strip_bound_with_drift():
    b = strip_bound(PendulumParams(0.2, 4 * math.pi, 1))
    assert b.p_hat == pytest.approx(0.5 / math.sqrt(0.75), abs=1e-15)
    assert b.p_tilde == pytest.approx(0.5 / math.sqrt(0.75) + 4 * math.pi * 0.2 + 1, abs=1e-14)


def test_strip_bound_without_drift(free_params):
    assert strip_bound(free_params).p_hat == 0.0


def test_strip_bound_invariant():
    with pytest.raises(ValueError):
        StripBound(1.0, 0.5)


def test_boundary_twist_unforced():
    bt = boundary_twist_check(UNFORCED, strip_bound(UNFORCED), 64)
    assert bt.upper_min > 0 and bt.lower_max < 0


def test_boundary_twist_free_exact(free_params):
    b = StripBound(0.0, 0.8)
    bt = boundary_twist_check(free_params, b, 16)
    assert bt.upper_min == pytest.approx(TWO_PI * 0.8 / math.hypot(1, 0.8), abs=1e-10)
    assert bt.lower_max == pytest.approx(-TWO_PI * 0.8 / math.hypot(1, 0.8), abs=1e-10)


def test_boundary_twist_forced_256():
    bt = boundary_twist_check(FORCED, strip_bound(FORCED), 256)
    assert bt.upper_min > 0 and bt.lower_max < 0 and bt.gap > 0


def test_boundary_twist_failure_carries_angle():
    # a strip far too thin for the forcing to respect
    params = PendulumParams(0.2, TWO_PI, 0, ForcingSeries((0.5,)))
    with pytest.raises(BoundaryTwistError) as info:
        boundary_twist_check(params, StripBound(0.0, 0.01), 16)
    assert 0 <= info.value.q < TWO_PI


@pytest.mark.parametrize("a", GRID_A)
def test_twist_below_threshold(a):
    assert twist_margin(PendulumParams(a, TWO_PI), (-2.26, 2.26), 32) > 0


def test_twist_counterexample_closed_form():
    value = twist_at(PendulumParams(0.3, TWO_PI), (0.0, 0.0))
    assert value == pytest.approx(math.sin(TWO_PI * math.sqrt(0.3)) / math.sqrt(0.3), abs=1e-3)
    assert value < 0


def test_twist_vanishes_at_threshold():
    assert abs(twist_at(PendulumParams(0.25, TWO_PI), (0.0, 0.0))) < 1e-7


def test_twist_report_fields():
    report = twist_report(UNFORCED, n_grid=4)
    assert set(report) == {"min_twist", "grid", "region", "params_hash"}
    assert report["grid"] == [4, 4]
    json.dumps(report)


def image_loop(params, qs, ps):
    imgs = [flow(params, (q, p), 0.0, params.T) for q, p in zip(qs, ps)]
    return np.array([s.q for s in imgs]), np.array([s.p for s in imgs])


def test_intersection_forced_sine_curve():
    qs = TWO_PI * np.arange(512) / 512
    res = curve_intersection_count(FORCED, qs, 0.2 * np.sin(qs))
    assert res.count >= 2 and not res.invariant


def test_intersection_free_invariant_curve(free_params):
    qs = TWO_PI * np.arange(64) / 64
    res = curve_intersection_count(free_params, qs, np.full(64, 0.75))
    assert res.invariant and res.satisfies_intersection_property


@pytest.mark.parametrize("curve", [lambda q: np.full_like(q, 0.5), lambda q: 0.3 * np.cos(q) - 0.1])
def test_intersection_count_matches_dense_oracle(curve):
    qs = TWO_PI * np.arange(512) / 512
    res = curve_intersection_count(UNFORCED, qs, curve(qs))
    dense = TWO_PI * np.arange(10_000) / 10_000
    iq, ip = image_loop(UNFORCED, dense, curve(dense))
    expected = polyline_crossings(dense, curve(dense), iq, ip)
    assert expected >= 2
    assert res.count == expected and not res.inconclusive


def test_read_curve_csv(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("q,p\n0.0,0.5\n1.0,0.25\n")
    q, p = read_curve_csv(path)
    np.testing.assert_array_equal(q, [0.0, 1.0])
    np.testing.assert_array_equal(p, [0.5, 0.25])
