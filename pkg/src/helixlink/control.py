"""Closed-loop tuning: calibration table, Doppler prediction, target
selection and beam steering against bank."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .actuation import ActuatorConfig, settle_time
from .antenna import (MAX_TILT_RAD, reference_geometry, reference_sensitivity,
                      resonant_frequency_array, vswr_curve)
from .channel import doppler_shift
from .constants import F0_HZ
from .errors import ConfigurationError

PITCH_GRID_POINTS = 41
FREQUENCY_STEP_HZ = 25.0
FREQUENCY_SPAN_HZ = 1000.0
TILT_STEP_RAD = math.radians(1.0)
_TIE_TOL = 1e-12


class ControlMode(str, Enum):
    STATIC = "static"
    TUNED = "tuned"


@dataclass(frozen=True)
class CalibrationEntry:
    target_frequency_hz: float
    pitch_setting_mm: float
    tilt_setting_rad: float
    achieved_vswr: float


@dataclass(frozen=True)
class CalibrationTable:
    entries: tuple[CalibrationEntry, ...]
    frequency_step_hz: float

    def __post_init__(self):
        freqs = [e.target_frequency_hz for e in self.entries]
        if not freqs:
            raise ConfigurationError("calibration table is empty")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ConfigurationError("calibration entries must be sorted by unique frequency")
        if any(e.achieved_vswr < 1.0 for e in self.entries):
            raise ConfigurationError("achieved VSWR below 1 in calibration table")

    @property
    def frequencies(self):
        return np.array([e.target_frequency_hz for e in self.entries])

    @property
    def pitches(self):
        return np.array([e.pitch_setting_mm for e in self.entries])

    def covers(self, f0_hz, span_hz=FREQUENCY_SPAN_HZ):
        f = self.frequencies
        return f[0] <= f0_hz - span_hz + 1e-6 and f[-1] >= f0_hz + span_hz - 1e-6


@dataclass(frozen=True)
class ControllerConfig:
    tick_rate_hz: float = 100.0
    prediction_horizon_s: float | None = None  # None: settle time of the anticipated move
    mode: ControlMode = ControlMode.TUNED

    def __post_init__(self):
        if self.tick_rate_hz <= 0:
            raise ConfigurationError("tick rate must be positive")
        if self.prediction_horizon_s is not None and self.prediction_horizon_s < 0:
            raise ConfigurationError("prediction horizon must be >= 0")


def default_pitch_grid(travel_mm=ActuatorConfig().travel_mm, n=PITCH_GRID_POINTS):
    # rounded so table values read back exactly (0.1 mm, not 0.1000000004)
    return np.round(np.linspace(-travel_mm, travel_mm, n), 9)


def default_frequency_grid(f0_hz=F0_HZ, step_hz=FREQUENCY_STEP_HZ, span_hz=FREQUENCY_SPAN_HZ):
    n = int(round(2 * span_hz / step_hz)) + 1
    return f0_hz + np.linspace(-span_hz, span_hz, n)


def build_calibration_table(geometry_grid=None, frequency_grid=None, f0_hz=F0_HZ,
                            travel_mm=ActuatorConfig().travel_mm):
    """For each target frequency pick the pitch (mm offset from the reference
    pitch) with the lowest modelled VSWR; ties go to the smaller offset."""
    pitches = default_pitch_grid(travel_mm) if geometry_grid is None else np.asarray(geometry_grid, float)
    freqs = default_frequency_grid(f0_hz) if frequency_grid is None else np.asarray(frequency_grid, float)
    if pitches.size == 0 or freqs.size == 0:
        raise ConfigurationError("calibration grids must be non-empty")
    if np.any(np.abs(pitches) > travel_mm + 1e-9):
        raise ConfigurationError("pitch grid exceeds actuator travel")
    freqs = np.unique(freqs)

    geom = reference_geometry(f0_hz)
    cal = reference_sensitivity(f0_hz)
    f_res = resonant_frequency_array(geom.diameter_m, geom.pitch_spacing_m + pitches * 1e-3, cal)
    vswr = vswr_curve(freqs[:, None] - f_res[None, :])

    entries = []
    for i, f in enumerate(freqs):
        row = vswr[i]
        best = row.min()
        tied = np.flatnonzero(row <= best + _TIE_TOL)
        j = tied[np.argmin(np.abs(pitches[tied]))]
        entries.append(CalibrationEntry(float(f), float(pitches[j]), 0.0, float(row[j])))
    step = float(np.min(np.diff(freqs))) if freqs.size > 1 else 0.0
    return CalibrationTable(tuple(entries), step)


def select_tuning(table, predicted_carrier_hz):
    """Nearest-frequency table entry; returns (pitch_mm, tilt_rad, clamped)."""
    f = table.frequencies
    clamped = bool(predicted_carrier_hz < f[0] or predicted_carrier_hz > f[-1])
    i = int(np.argmin(np.abs(f - predicted_carrier_hz)))
    e = table.entries[i]
    return e.pitch_setting_mm, e.tilt_setting_rad, clamped


def propagate_ctrv(position, velocity, yaw_rate, horizon_s):
    """Constant turn-rate propagation of position and velocity (z unaffected)."""
    p = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    wh = yaw_rate * horizon_s
    c, s = math.cos(wh), math.sin(wh)
    v_new = np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])
    if abs(yaw_rate) < 1e-12:
        disp = v * horizon_s
    else:
        a = s / yaw_rate
        b = (1.0 - c) / yaw_rate
        disp = np.array([a * v[0] - b * v[1], b * v[0] + a * v[1], v[2] * horizon_s])
    return p + disp, v_new


def predict_doppler(flight, rx_pos, horizon_s, f0_hz=F0_HZ):
    """Doppler expected ``horizon_s`` ahead assuming the current yaw rate holds."""
    pos, vel = propagate_ctrv(flight.position_m, flight.velocity_mps, flight.yaw_rate_rad_s, horizon_s)
    return doppler_shift(vel, pos, rx_pos, f0_hz).shift_hz


def off_axis_angle(net_roll_rad, net_pitch_rad):
    """Angle between boresight and its level-flight direction after rotating
    by the residual roll and pitch."""
    return np.arccos(np.clip(np.cos(net_roll_rad) * np.cos(net_pitch_rad), -1.0, 1.0))


@dataclass(frozen=True)
class SteeringCommand:
    tilt_rad: tuple[float, float]
    residual_rad: float
    clamped: bool


def steer_beam(attitude):
    """Tilt opposite to roll and pitch, within the +/-45 deg actuator range.

    The boresight looks at the receiver in level flight, so the residual
    misalignment is whatever attitude the tilt could not cancel.
    """
    roll, pitch = attitude[0], attitude[1]
    if abs(roll) > math.pi / 2 + 1e-12:
        raise ConfigurationError("|bank| must not exceed 90 deg")
    want = (-roll, -pitch)
    tilt = tuple(float(np.clip(w, -MAX_TILT_RAD, MAX_TILT_RAD)) for w in want)
    clamped = tilt != want
    residual = float(off_axis_angle(roll + tilt[0], pitch + tilt[1]))
    return SteeringCommand(tilt, residual, clamped)


@dataclass
class Decision:
    t_s: float
    predicted_doppler_hz: float
    horizon_s: float
    pitch_mm: float
    tilt_rad: tuple[float, float]
    submitted_pitch: bool
    submitted_tilt: bool
    clamped: bool


DECISION_COLUMNS = ("t_s", "predicted_doppler_hz", "horizon_s", "pitch_mm", "tilt_roll_rad",
                    "tilt_pitch_rad", "submitted_pitch", "submitted_tilt", "clamped")


@dataclass
class Controller:
    config: ControllerConfig
    table: CalibrationTable | None
    rx_pos: np.ndarray
    f0_hz: float = F0_HZ
    decisions: list = field(default_factory=list)

    def __post_init__(self):
        if self.config.mode is ControlMode.TUNED and self.table is None:
            raise ConfigurationError("tuned mode requires a calibration table")

    def tick(self, flight, actuator, now):
        """One control period; returns the list of submitted move records."""
        if self.config.mode is ControlMode.STATIC:
            return []
        horizon = self.config.prediction_horizon_s
        if horizon is None:
            # settle time depends on the move, which depends on the prediction
            df = predict_doppler(flight, self.rx_pos, 0.0, self.f0_hz)
            pitch, _, _ = select_tuning(self.table, self.f0_hz + df)
            travel = abs(pitch - float(actuator.pitch.actual[0]))
            horizon = settle_time(travel, actuator.config)
        df = predict_doppler(flight, self.rx_pos, horizon, self.f0_hz)
        pitch, _, clamped = select_tuning(self.table, self.f0_hz + df)
        steer = steer_beam(flight.attitude)

        cur_pitch, cur_tilt = actuator.pending_or_commanded()
        step = actuator.config.step_mm
        want_pitch = abs(pitch - cur_pitch) >= step - 1e-9
        want_tilt = max(abs(a - b) for a, b in zip(steer.tilt_rad, cur_tilt)) >= TILT_STEP_RAD - 1e-12
        records = actuator.submit(pitch if want_pitch else None,
                                  steer.tilt_rad if want_tilt else None, now)
        self.decisions.append(Decision(now, df, horizon, pitch, steer.tilt_rad,
                                       want_pitch, want_tilt, clamped))
        return records
