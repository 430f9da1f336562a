import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherent_bell.polarization import (H, V, AnalyzerSetting, JonesVector, analyzer_amplitude, apply,
                                        beam_splitter, equal_up_to_global_phase, half_wave_plate,
                                        is_unitary, quarter_wave_plate, retarder)

S = 1 / math.sqrt(2)
angles = st.floats(min_value=-10, max_value=10, allow_nan=False)
components = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def test_qwp45_matches_field_transformations_exactly():
    qwp = quarter_wave_plate(math.pi / 4)
    np.testing.assert_allclose(qwp, S * np.array([[1, -1j], [-1j, 1]]), atol=1e-15)
    # V -> -iH + V and H -> H - iV, with no extra global phase
    np.testing.assert_allclose(apply(qwp, V).as_array(), S * np.array([-1j, 1]), atol=1e-15)
    np.testing.assert_allclose(apply(qwp, H).as_array(), S * np.array([1, -1j]), atol=1e-15)


def test_qwp45_reproduces_arm2_lines_through_splitter_phase():
    # Second splitter port carries the noise field with a minus sign.
    _, noise2 = beam_splitter(JonesVector(0, 0), H)
    _, signal2 = beam_splitter(V, JonesVector(0, 0))
    qwp = quarter_wave_plate(math.pi / 4)
    np.testing.assert_allclose(apply(qwp, noise2).as_array() * 2, [-1, 1j], atol=1e-15)
    np.testing.assert_allclose(apply(qwp, signal2).as_array() * 2, [-1j, 1], atol=1e-15)


@pytest.mark.parametrize("deg", [0, 15, 22.5, 30, 45, 60, 90, -45, 137])
def test_two_quarter_waves_make_a_half_wave(deg):
    t = math.radians(deg)
    q = quarter_wave_plate(t)
    assert equal_up_to_global_phase(q @ q, half_wave_plate(t))


def test_half_wave_examples():
    assert equal_up_to_global_phase(apply(half_wave_plate(0.0), V), JonesVector(0, -1))
    assert equal_up_to_global_phase(apply(half_wave_plate(math.pi / 4), H), V)
    for deg in (0, 15, 30, 45):
        assert is_unitary(half_wave_plate(math.radians(deg)))


def test_half_wave_is_pi_retarder_up_to_phase():
    for t in np.linspace(-3, 3, 13):
        np.testing.assert_allclose(half_wave_plate(t), 1j * retarder(t, math.pi), atol=1e-14)


def test_wave_plates_unitary_for_many_random_angles():
    rng = np.random.default_rng(7)
    for t in rng.uniform(-2 * math.pi, 2 * math.pi, 1000):
        assert is_unitary(quarter_wave_plate(t))
        assert is_unitary(half_wave_plate(t))


@given(angles, angles)
def test_retarder_unitary(theta, delta):
    assert is_unitary(retarder(theta, delta))


def test_beam_splitter_examples():
    o1, o2 = beam_splitter(V, JonesVector(0, 0))
    np.testing.assert_allclose(o1.as_array(), [0, S], atol=1e-15)
    np.testing.assert_allclose(o2.as_array(), [0, S], atol=1e-15)
    o1, o2 = beam_splitter(H, H)
    np.testing.assert_allclose(o1.as_array(), [math.sqrt(2), 0], atol=1e-15)
    np.testing.assert_allclose(o2.as_array(), [0, 0], atol=1e-15)


def test_beam_splitter_conserves_energy_on_random_inputs():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(100, 2)) + 1j * rng.normal(size=(100, 2))
    b = rng.normal(size=(100, 2)) + 1j * rng.normal(size=(100, 2))
    o1, o2 = beam_splitter(a, b)
    e_in = np.sum(np.abs(a) ** 2 + np.abs(b) ** 2, axis=1)
    e_out = np.sum(np.abs(o1) ** 2 + np.abs(o2) ** 2, axis=1)
    np.testing.assert_allclose(e_out, e_in, rtol=1e-12)


@given(angles, components, components)
def test_plates_preserve_norm(theta, h, v):
    state = JonesVector(h, v)
    for m in (quarter_wave_plate(theta), half_wave_plate(theta)):
        out = apply(m, state)
        assert out.intensity == pytest.approx(state.intensity, rel=1e-12, abs=1e-300)


def test_analyzer_examples():
    assert analyzer_amplitude(H, 0.0) == pytest.approx(1.0)
    assert abs(analyzer_amplitude(H, math.pi / 2)) < 1e-16
    t = 0.37
    state = JonesVector(-1j * S, S)
    assert analyzer_amplitude(state, t) == pytest.approx((-1j * math.cos(t) + math.sin(t)) * S, abs=1e-15)


@given(components, components, components, components, components, angles)
def test_analyzer_is_linear(h1, v1, h2, v2, alpha, theta):
    x, y = JonesVector(h1, v1), JonesVector(h2, v2)
    lhs = analyzer_amplitude(alpha * x + y, theta)
    rhs = alpha * analyzer_amplitude(x, theta) + analyzer_amplitude(y, theta)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_analyzer_setting_canonical_range():
    assert AnalyzerSetting(math.pi).angle == 0.0
    assert AnalyzerSetting(-math.pi / 4).angle == pytest.approx(3 * math.pi / 4)
    assert AnalyzerSetting.from_degrees(90).angle == pytest.approx(math.pi / 2)
    assert AnalyzerSetting.from_degrees(210).degrees == pytest.approx(30)
    with pytest.raises(ValueError):
        AnalyzerSetting(float("nan"))


@given(angles)
def test_analyzer_setting_always_in_range(t):
    assert 0.0 <= AnalyzerSetting(t).angle < math.pi


def test_vectorized_apply_matches_scalar():
    q = quarter_wave_plate(0.2)
    states = np.array([[1, 0], [0, 1], [S, 1j * S]], dtype=complex)
    out = apply(q, states)
    for row, s in zip(out, states):
        np.testing.assert_allclose(row, apply(q, JonesVector.from_array(s)).as_array())


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        JonesVector(float("inf"), 0)
    with pytest.raises(FloatingPointError):
        apply(quarter_wave_plate(0.1), np.array([[np.nan, 0]]))
