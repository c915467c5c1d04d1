import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helixlink.actuation import Actuator
from helixlink.antenna import (reference_geometry, reference_sensitivity, resonant_frequency, vswr_curve)
from helixlink.channel import doppler_shift
from helixlink.constants import F0_HZ, MPH_TO_MPS
from helixlink.control import (CalibrationEntry, CalibrationTable, ControlMode, Controller, ControllerConfig,
                               build_calibration_table, default_frequency_grid, default_pitch_grid,
                               off_axis_angle, predict_doppler, propagate_ctrv, select_tuning, steer_beam)
from helixlink.engine import run_scenario, steady_residual_detune
from helixlink.errors import ConfigurationError
from helixlink.flight import FlightState

from helixlink.antenna import HelixGeometry


def test_table_matches_brute_force_argmin(table):
    geom, cal = reference_geometry(), reference_sensitivity()
    pitches = default_pitch_grid()
    for e, f in zip(table.entries, default_frequency_grid()):
        best, best_p = math.inf, None
        for p in pitches:
            g = HelixGeometry(geom.diameter_m, geom.pitch_spacing_m + p * 1e-3, geom.turns,
                              geom.conductor_width_m)
            v = float(vswr_curve(f - resonant_frequency(g, cal)))
            if v < best - 1e-12 or (abs(v - best) <= 1e-12 and abs(p) < abs(best_p)):
                best, best_p = v, p
        assert e.target_frequency_hz == f
        assert e.pitch_setting_mm == best_p
        assert e.achieved_vswr == pytest.approx(best, abs=1e-12)


def test_table_shape_and_documented_points(table):
    assert len(table.entries) == 81 and table.frequency_step_hz == pytest.approx(25.0)
    assert table.covers(F0_HZ)
    pitch, tilt, clamped = select_tuning(table, F0_HZ)
    assert pitch == 0.0 and tilt == 0.0 and not clamped
    # +1 kHz of Doppler needs the resonance raised by 1 kHz: compress by 2 mm
    assert select_tuning(table, F0_HZ + 1000)[0] == pytest.approx(-2.0)
    assert select_tuning(table, F0_HZ - 1000)[0] == pytest.approx(2.0)
    assert select_tuning(table, F0_HZ + 5000)[2]
    assert max(e.achieved_vswr for e in table.entries) <= 1.21


def test_single_geometry_grid():
    t = build_calibration_table(geometry_grid=[0.0], frequency_grid=[F0_HZ - 100, F0_HZ, F0_HZ + 100])
    assert [e.pitch_setting_mm for e in t.entries] == [0.0, 0.0, 0.0]


def test_table_validation():
    with pytest.raises(ConfigurationError):
        build_calibration_table(geometry_grid=[3.0])
    with pytest.raises(ConfigurationError):
        CalibrationTable((), 25.0)
    e = CalibrationEntry(F0_HZ, 0.0, 0.0, 1.2)
    with pytest.raises(ConfigurationError):
        CalibrationTable((e, e), 25.0)


def _integrate_turn(p, v, w, horizon, n=100_000):
    dt = horizon / n
    p, v = np.array(p, float), np.array(v, float)
    for _ in range(n):
        a = w * np.array([-v[1], v[0], 0.0])
        v_mid = v + 0.5 * dt * a
        p = p + dt * v_mid
        a_mid = w * np.array([-v_mid[1], v_mid[0], 0.0])
        v = v + dt * a_mid
    return p, v


def test_ctrv_matches_fine_integration():
    v = 150 * MPH_TO_MPS
    p0, v0 = [10.0, -5.0, 30.0], [v, 0.0, 0.0]
    w = math.radians(90)
    p_ref, v_ref = _integrate_turn(p0, v0, w, 0.150)
    p, vv = propagate_ctrv(p0, v0, w, 0.150)
    np.testing.assert_allclose(p, p_ref, atol=1e-4)
    np.testing.assert_allclose(vv, v_ref, atol=1e-4)
    rx = np.array([500.0, 0.0, 2.0])
    ref = doppler_shift(v_ref, p_ref, rx, F0_HZ).shift_hz
    state = FlightState(0.0, np.array(p0), np.array(v0), (0.0, 0.0, 0.0), w)
    assert predict_doppler(state, rx, 0.150) == pytest.approx(ref, abs=0.01)


def test_ctrv_straight_line_limit():
    p, v = propagate_ctrv([0, 0, 0], [10, 0, 1], 0.0, 2.0)
    np.testing.assert_allclose(p, [20, 0, 2])
    np.testing.assert_allclose(v, [10, 0, 1])


def test_steering_examples():
    s = steer_beam((math.radians(30), math.radians(-10), 0.0))
    assert s.tilt_rad == pytest.approx((math.radians(-30), math.radians(10)))
    assert s.residual_rad == pytest.approx(0.0, abs=1e-12) and not s.clamped
    s = steer_beam((math.radians(60), 0.0, 0.0))
    assert s.clamped and math.degrees(s.residual_rad) == pytest.approx(15.0)
    with pytest.raises(ConfigurationError):
        steer_beam((math.radians(95), 0.0, 0.0))


@given(st.floats(-math.pi / 4, math.pi / 4), st.floats(-math.pi / 4, math.pi / 4))
def test_steering_cancels_within_range(roll, pitch):
    s = steer_beam((roll, pitch, 0.0))
    assert s.residual_rad <= math.radians(10)
    assert abs(float(off_axis_angle(roll + s.tilt_rad[0], pitch + s.tilt_rad[1]))) < 1e-9


def test_static_mode_leaves_actuator_idle(table):
    from helixlink.engine import urban_sprint_conditions
    cfg = urban_sprint_conditions(150, mode="static").with_overrides(profile={"cruise_s": 0.5})
    res = run_scenario(cfg, 3, table)
    assert res.decisions == []
    rows = np.array(res.metrics.actuator_trace, dtype=float)
    idle = Actuator(np.random.default_rng(0)).trace_row()
    assert np.all(rows[:, 1:] == np.array(idle, dtype=float)[1:])


def test_deadband_suppresses_repeat_commands(table):
    act = Actuator(np.random.default_rng(0))
    c = Controller(ControllerConfig(), table, np.array([1e7, 0.0, 0.0]))
    hover = FlightState(0.0, np.zeros(3), np.zeros(3), (0.0, 0.0, 0.0), 0.0)
    for i in range(20):
        t = i * 0.01
        act.advance_to(t)
        assert c.tick(hover, act, t) == []
    assert not any(d.submitted_pitch or d.submitted_tilt for d in c.decisions)


def test_static_controller_is_inert(table):
    act = Actuator(np.random.default_rng(0))
    c = Controller(ControllerConfig(mode=ControlMode.STATIC), None, np.zeros(3))
    state = FlightState(0.0, np.zeros(3), np.array([80.0, 0, 0]), (0.5, 0.0, 0.0), 0.0)
    assert c.tick(state, act, 0.0) == [] and c.decisions == []
    with pytest.raises(ConfigurationError):
        Controller(ControllerConfig(), None, np.zeros(3))


@pytest.mark.parametrize("mph", [50, 100, 150])
def test_closed_loop_residual_detune_bound(table, mph):
    # one table pitch step (50 Hz) plus half a frequency bin and actuator noise
    off = F0_HZ * mph * MPH_TO_MPS / 299_792_458.0
    assert steady_residual_detune(off, seed=mph, table=table) <= 75.0
