import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relpendulum import (
    ForcingSeries,
    LabState,
    PendulumParams,
    admissible,
    drift_speed,
    energy,
    hamiltonian,
    to_momentum,
    to_velocity,
    vector_field,
)
from relpendulum.errors import DomainError, ParameterError

TWO_PI = 2 * math.pi

coeffs = st.lists(st.floats(-1, 1), max_size=4)
velocities = st.floats(-0.999, 0.999)


def test_drift_speed_examples():
    assert drift_speed(PendulumParams(0.2, TWO_PI, 0)) == 0.0
    assert drift_speed(PendulumParams(0.2, 4 * math.pi, 1)) == 0.5
    assert drift_speed(PendulumParams(0.2, TWO_PI, 2)) == 2.0


def test_admissible_examples():
    assert not admissible(PendulumParams(0.2, TWO_PI, 1))
    assert admissible(PendulumParams(0.2, 1.0, 0))
    assert admissible(PendulumParams(0.2, 10.0, 1))


@given(st.integers(-5, 5), st.floats(0.1, 100), st.floats(0, 100))
def test_admissible_monotone_in_period(N, T, extra):
    if admissible(PendulumParams(0.2, T, N)):
        assert admissible(PendulumParams(0.2, T + extra, N))


def test_momentum_velocity_examples():
    assert to_velocity(0.0) == 0.0
    assert to_velocity(0.75) == pytest.approx(0.6, abs=1e-15)
    assert to_momentum(0.6) == pytest.approx(0.75, abs=1e-15)


@pytest.mark.parametrize("v", [1.0, -1.0, 1.5])
def test_superluminal_velocity_rejected(v):
    with pytest.raises(DomainError):
        to_momentum(v)


def test_roundtrip_random_velocities():
    v = np.random.default_rng(1).uniform(-0.999, 0.999, 1000)
    assert np.max(np.abs(to_velocity(to_momentum(v)) - v)) < 1e-14


@given(velocities, velocities)
def test_momentum_odd_and_increasing(v1, v2):
    assert to_momentum(-v1) == -to_momentum(v1)
    if v1 < v2:
        assert to_momentum(v1) < to_momentum(v2)


def test_vector_field_examples():
    params = PendulumParams(0.2, TWO_PI)
    assert vector_field(params, 0.0, (0.0, 0.0)) == (0.0, 0.0)
    dq, dp = vector_field(params, 0.0, (math.pi / 2, 0.0))
    assert dq == 0.0 and dp == pytest.approx(-0.2, abs=1e-16)
    dq, dp = vector_field(params, 0.0, (0.0, 0.75))
    assert dq == pytest.approx(0.6, abs=1e-15) and dp == 0.0


@settings(max_examples=50)
@given(st.floats(0, 2), st.floats(0.5, 20), coeffs, coeffs, st.floats(-50, 50),
       st.floats(-10, 10), st.floats(-1e3, 1e3))
def test_momentum_rate_bounded(a, T, c, s, t, q, p):
    params = PendulumParams(a, T, 0, ForcingSeries(tuple(c), tuple(s)))
    bound = a + params.forcing.sup_norm_bound()
    assert abs(vector_field(params, t, (q, p))[1]) <= bound + 1e-12


@settings(max_examples=30)
@given(st.floats(0.5, 20), coeffs, coeffs)
def test_forcing_has_zero_mean(T, c, s):
    f = ForcingSeries(tuple(c), tuple(s))
    nodes = np.arange(10_000) * T / 10_000
    assert abs(np.mean(f.evaluate(nodes, T)) * T) < 1e-12


@settings(max_examples=30)
@given(st.floats(0.5, 20), coeffs, coeffs)
def test_sup_norm_bound_dominates(T, c, s):
    f = ForcingSeries(tuple(c), tuple(s))
    t = np.linspace(0, T, 2001)
    assert np.max(np.abs(f.evaluate(t, T)), initial=0.0) <= f.sup_norm_bound() + 1e-12


def test_hamiltonian_examples():
    params = PendulumParams(0.2, TWO_PI)
    assert hamiltonian(params, 0.0, (0.0, 0.0)) == pytest.approx(0.8, abs=1e-15)
    assert hamiltonian(params, 0.0, (math.pi, 0.0)) == pytest.approx(1.2, abs=1e-15)
    with pytest.warns(UserWarning):
        free = PendulumParams(0.0, 4 * math.pi, 1)
    assert hamiltonian(free, 0.0, (0.0, 0.75)) == pytest.approx(0.875, abs=1e-15)


def test_energy_examples():
    assert energy(0.25, LabState(0.0, 0.0)) == 1.0
    assert energy(0.25, LabState(math.pi, 0.0)) == pytest.approx(1.5, abs=1e-15)
    assert energy(0.25, LabState(0.0, 0.6)) == pytest.approx(1.25, abs=1e-15)


@given(st.floats(0, 5), st.floats(-100, 100), velocities)
def test_energy_at_least_one(a, x, v):
    E = energy(a, (x, v))
    assert E >= 1.0
    if E == 1.0 and a > 0:
        assert v == 0.0 or abs(v) < 1e-7


def test_energy_rejects_superluminal():
    with pytest.raises(DomainError):
        energy(0.2, (0.0, 1.0))


@pytest.mark.parametrize("kwargs", [dict(a=-0.1, T=1.0), dict(a=0.1, T=0.0), dict(a=0.1, T=1.0, N=0.5)])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ParameterError):
        PendulumParams(**kwargs)


def test_zero_gravity_warns():
    with pytest.warns(UserWarning, match="free-rotator"):
        PendulumParams(0.0, 1.0)


def test_params_json_roundtrip(tmp_path):
    params = PendulumParams(0.2, TWO_PI, 0, ForcingSeries((0.1,), (0.0, 0.05)))
    path = tmp_path / "p.json"
    path.write_text(json.dumps(params.to_dict()))
    assert PendulumParams.from_json(path) == params
    assert PendulumParams.from_dict({"a": 0.2, "T": 1.0}).forcing.is_zero


def test_params_unknown_keys_rejected():
    with pytest.raises(ParameterError):
        PendulumParams.from_dict({"a": 0.2, "T": 1.0, "b": 3})
    with pytest.raises(ParameterError):
        PendulumParams.from_dict({"a": 0.2, "T": 1.0, "forcing": {"cos": [1], "const": 1}})
