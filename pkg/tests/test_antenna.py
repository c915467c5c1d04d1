import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helixlink.antenna import (VSWR_ANCHORS, HelixGeometry, axial_gain_dbi, axial_gain_linear,
                               gain_pattern_db, mismatch_loss_db, pitch_angle, reference_geometry,
                               reference_sensitivity, reflection_coefficient, resonant_frequency,
                               resonant_frequency_array, return_loss_db, vswr_at_detuning, vswr_curve,
                               vswr_from_reflection)
from helixlink.constants import F0_HZ, SPEED_OF_LIGHT
from helixlink.errors import DomainError

LAM = SPEED_OF_LIGHT / F0_HZ


def test_reference_geometry_dimensions():
    g = reference_geometry()
    assert g.diameter_m == pytest.approx(39.76e-3, abs=0.01e-3)
    assert g.pitch_spacing_m == pytest.approx(31.14e-3, abs=0.01e-3)
    assert g.circumference_m == pytest.approx(LAM, rel=1e-12)
    assert math.degrees(pitch_angle(g)) == pytest.approx(14.0, abs=1e-9)


def test_reference_gain_closed_form():
    g = reference_geometry()
    expected = 10 * math.sin(math.radians(14.0)) ** 2
    assert axial_gain_linear(g, LAM) == pytest.approx(expected, rel=1e-12)
    assert 10 * math.log10(expected) == pytest.approx(-2.33, abs=0.01)


def test_gain_vectorised_matches_scalar():
    g = reference_geometry()
    pitches = g.pitch_spacing_m + np.linspace(-2e-3, 2e-3, 9)
    vec = axial_gain_dbi(g.diameter_m, pitches, g.turns, LAM)
    for p, v in zip(pitches, vec):
        scalar = 10 * math.log10(axial_gain_linear(g.with_pitch(p), LAM))
        assert v == pytest.approx(scalar, abs=1e-12)


def test_resonance_sensitivity():
    cal = reference_sensitivity()
    g = reference_geometry()
    assert resonant_frequency(g, cal) == pytest.approx(F0_HZ, rel=1e-14)
    up = resonant_frequency(g.with_pitch(g.pitch_spacing_m + 2e-3), cal)
    down = resonant_frequency(g.with_pitch(g.pitch_spacing_m - 2e-3), cal)
    assert up - F0_HZ == pytest.approx(-1000.0, abs=1e-3)
    assert down - F0_HZ == pytest.approx(1000.0, abs=1e-3)


def test_resonance_slope_finite_difference():
    cal = reference_sensitivity()
    g = reference_geometry()
    h = 1e-6
    s = g.pitch_spacing_m
    fd = (resonant_frequency_array(g.diameter_m, s + h, cal) - resonant_frequency_array(g.diameter_m, s - h, cal)) / (2 * h)
    assert fd == pytest.approx(cal.hz_per_m, rel=1e-6)
    assert cal.pitch_for_offset(500.0) == pytest.approx(s - 1e-3, abs=1e-12)


def test_pattern_anchor_and_floor():
    assert gain_pattern_db(0.0) == pytest.approx(0.0, abs=1e-12)
    assert gain_pattern_db(math.radians(45)) == pytest.approx(-2.0, abs=1e-9)
    assert gain_pattern_db(math.radians(90)) == pytest.approx(-15.0)
    assert gain_pattern_db(math.radians(120)) == pytest.approx(-15.0)


@given(st.floats(0, math.pi / 2 - 1e-3), st.floats(0, math.pi / 2 - 1e-3))
def test_pattern_monotone(a, b):
    lo, hi = sorted((a, b))
    assert gain_pattern_db(lo) >= gain_pattern_db(hi) - 1e-12


def test_vswr_anchors_reproduced():
    for detune, v in VSWR_ANCHORS:
        assert vswr_curve(detune) == pytest.approx(v, abs=1e-6)
        assert vswr_curve(-detune) == pytest.approx(v, abs=1e-6)


@given(st.floats(-5000, 5000), st.floats(-5000, 5000))
def test_vswr_even_monotone_bounded(a, b):
    va, vb = vswr_curve(a), vswr_curve(b)
    assert 1.0 <= va <= 3.0
    assert vswr_curve(-a) == pytest.approx(va, abs=1e-12)
    if abs(a) <= abs(b):
        assert va <= vb + 1e-12


def test_mismatch_and_return_loss_values():
    assert mismatch_loss_db(2.0) == pytest.approx(0.5115, abs=1e-4)
    assert mismatch_loss_db(2.3) == pytest.approx(0.7324, abs=1e-4)
    assert mismatch_loss_db(1.0) == pytest.approx(0.0, abs=1e-15)
    assert return_loss_db(1.22) == pytest.approx(20.08, abs=0.01)
    with pytest.raises(DomainError):
        mismatch_loss_db(0.9)


@given(st.floats(0.0, 0.99))
def test_reflection_round_trip(gamma):
    assert reflection_coefficient(vswr_from_reflection(gamma)) == pytest.approx(gamma, abs=1e-9)


def test_vswr_at_detuning_record():
    r = vswr_at_detuning(0.0)
    assert r.vswr == pytest.approx(1.2)
    assert r.resonant_frequency_hz == pytest.approx(F0_HZ)
    assert r.reflection_coefficient == pytest.approx(0.2 / 2.2)


@pytest.mark.parametrize("kw", [dict(diameter_m=0.0, pitch_spacing_m=0.03),
                                dict(diameter_m=0.04, pitch_spacing_m=-1.0),
                                dict(diameter_m=0.04, pitch_spacing_m=0.03, turns=0)])
def test_geometry_validation(kw):
    with pytest.raises(DomainError):
        HelixGeometry(**kw)
