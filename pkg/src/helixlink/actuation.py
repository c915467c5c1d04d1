"""Discrete-time plant model of the pitch and tilt actuators.

Each axis sees a random command latency, a rate limit, step quantisation
(pitch only) and a bounded settling error. Motion is piecewise analytic in
time, so positions are exact at any query time and independent of how
finely the caller steps the clock.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

STEP_MM = 0.05
PITCH_TRAVEL_MM = 2.0
TILT_LIMIT_RAD = math.pi / 4
FULL_SWING_S = 0.100
LATENCY_MEAN_S = 0.047
LATENCY_SIGMA_S = 0.010
LATENCY_BOUNDS_S = (0.010, 0.100)
POSITION_ERROR_MM = 0.05
TILT_ERROR_RAD = math.radians(2.0)
# position-feedback confirmation after the target is reached
CONFIRM_WINDOW_S = 0.090


@dataclass(frozen=True)
class ActuatorConfig:
    step_mm: float = STEP_MM
    travel_mm: float = PITCH_TRAVEL_MM
    tilt_limit_rad: float = TILT_LIMIT_RAD
    full_swing_s: float = FULL_SWING_S
    latency_mean_s: float = LATENCY_MEAN_S
    latency_sigma_s: float = LATENCY_SIGMA_S
    latency_bounds_s: tuple[float, float] = LATENCY_BOUNDS_S
    position_error_mm: float = POSITION_ERROR_MM
    tilt_error_rad: float = TILT_ERROR_RAD
    confirm_window_s: float = CONFIRM_WINDOW_S

    @property
    def pitch_rate_mm_s(self):
        return 2.0 * self.travel_mm / self.full_swing_s

    @property
    def tilt_rate_rad_s(self):
        return 2.0 * self.tilt_limit_rad / self.full_swing_s


def settle_time(travel_mm, config=ActuatorConfig()):
    """Expected time from submit until the pitch reaches its target."""
    if travel_mm < 0:
        raise ValueError("travel must be non-negative")
    return config.latency_mean_s + travel_mm / config.pitch_rate_mm_s


@dataclass
class MoveRecord:
    axis: str
    submitted_s: float
    released_s: float
    start: np.ndarray
    target: np.ndarray
    reached_s: float | None = None
    completed_s: float | None = None
    clamped: bool = False


class _Axis:
    def __init__(self, name, ndim, rate, limit, step, error_bound, confirm_window):
        self.name = name
        self.rate = rate
        self.limit = limit
        self.step = step
        self.error_bound = error_bound
        self.confirm_window = confirm_window
        self.actual = np.zeros(ndim)
        self.commanded = np.zeros(ndim)
        self.velocity = np.zeros(ndim)
        self.pending = None  # (target, release_time, MoveRecord)
        self._move = None  # (t0, start, final, direction, distance, record)

    def clamp(self, target):
        target = np.atleast_1d(np.asarray(target, dtype=float)).copy()
        clipped = np.clip(target, -self.limit, self.limit)
        return clipped, bool(np.any(clipped != target))

    def release(self, target, t_release, record, rng):
        self.commanded = target.copy()
        start = self.actual.copy()
        delta = target - start
        if self.step:
            n = np.floor(np.abs(delta) / self.step + 1e-9)
            stepped = start + np.sign(delta) * n * self.step
        else:
            stepped = target.copy()
        direction = np.sign(stepped - start)
        gap = np.abs(target - stepped)
        # settling error only ever falls short of the target
        room = np.maximum(self.error_bound - gap, 0.0)
        undershoot = rng.uniform(0.0, 1.0, size=room.shape) * room
        undershoot = np.minimum(undershoot, np.abs(stepped - start))
        final = stepped - direction * undershoot
        distance = np.abs(final - start)
        record.start = start
        self._move = (t_release, start, final, direction, distance, record)
        if not np.any(distance > 0):
            record.reached_s = t_release
            record.completed_s = t_release + self.confirm_window
            self._move = None
            self.velocity[:] = 0.0

    def evaluate(self, t):
        if self._move is None:
            self.velocity[:] = 0.0
            return
        t0, start, final, direction, distance, record = self._move
        progress = np.minimum(self.rate * (t - t0), distance)
        done = progress >= distance
        if self.step:
            shown = np.where(done, distance, np.floor(progress / self.step + 1e-9) * self.step)
        else:
            shown = progress
        self.actual = start + direction * shown
        self.velocity = np.where(done, 0.0, direction * self.rate)
        if np.all(done):
            record.reached_s = t0 + float(np.max(distance)) / self.rate
            record.completed_s = record.reached_s + self.confirm_window
            self.actual = final.copy()
            self._move = None

    @property
    def moving(self):
        return self._move is not None


@dataclass
class ActuatorState:
    t_s: float
    commanded_mm: float
    actual_mm: float
    velocity_mm_per_s: float
    commanded_tilt_rad: tuple[float, float]
    actual_tilt_rad: tuple[float, float]
    pending: list = field(default_factory=list)
    travel_limits_mm: tuple[float, float] = (-PITCH_TRAVEL_MM, PITCH_TRAVEL_MM)


class Actuator:
    """Mirrored actuator pair driving one logical helix.

    Pitch positions are offsets (mm) from the reference pitch spacing; tilt
    is a two-component angle (rad) about the airframe roll and pitch axes.
    """

    def __init__(self, rng, config=None):
        self.config = config or ActuatorConfig()
        cfg = self.config
        self.rng = rng
        self.t = 0.0
        self.pitch = _Axis("pitch", 1, cfg.pitch_rate_mm_s, cfg.travel_mm, cfg.step_mm,
                           cfg.position_error_mm, cfg.confirm_window_s)
        self.tilt = _Axis("tilt", 2, cfg.tilt_rate_rad_s, cfg.tilt_limit_rad, 0.0,
                          cfg.tilt_error_rad, cfg.confirm_window_s)
        self.moves = []
        self.events = []

    def draw_latency(self):
        cfg = self.config
        if cfg.latency_sigma_s == 0:
            return cfg.latency_mean_s
        lo, hi = cfg.latency_bounds_s
        while True:
            x = self.rng.normal(cfg.latency_mean_s, cfg.latency_sigma_s)
            if lo <= x <= hi:
                return x

    def _submit_axis(self, axis, target, now):
        target, clamped = axis.clamp(target)
        if clamped:
            self.events.append(("clamp", now, axis.name, target.tolist()))
            log.info("clamped %s command to %s at t=%.3f", axis.name, target, now)
        release = now + self.draw_latency()
        record = MoveRecord(axis.name, now, release, axis.actual.copy(), target, clamped=clamped)
        if axis.pending is not None:
            self.events.append(("superseded", now, axis.name, axis.pending[0].tolist()))
        axis.pending = (target, release, record)
        self.moves.append(record)
        return record

    def submit(self, target_mm=None, target_tilt_rad=None, now_s=None):
        """Queue new targets; a newer command replaces a pending one on the same axis."""
        now = self.t if now_s is None else now_s
        self.advance_to(now)
        records = []
        if target_mm is not None:
            records.append(self._submit_axis(self.pitch, target_mm, now))
        if target_tilt_rad is not None:
            records.append(self._submit_axis(self.tilt, target_tilt_rad, now))
        return records

    def advance_to(self, t):
        if t < self.t:
            raise ValueError(f"time runs forward only ({t} < {self.t})")
        for axis in (self.pitch, self.tilt):
            if axis.pending is not None and axis.pending[1] <= t:
                target, release, record = axis.pending
                axis.pending = None
                axis.evaluate(release)
                axis.release(target, release, record, self.rng)
            axis.evaluate(t)
        self.t = t
        return self

    def step(self, dt_s):
        if dt_s < 0:
            raise ValueError("dt must be non-negative")
        if dt_s == 0:
            return self
        return self.advance_to(self.t + dt_s)

    @property
    def settled(self):
        return (self.pitch.pending is None and self.tilt.pending is None
                and not self.pitch.moving and not self.tilt.moving)

    def pending_or_commanded(self):
        pitch = self.pitch.pending[0] if self.pitch.pending else self.pitch.commanded
        tilt = self.tilt.pending[0] if self.tilt.pending else self.tilt.commanded
        return float(pitch[0]), tuple(float(x) for x in tilt)

    def state(self):
        pend = []
        for axis in (self.pitch, self.tilt):
            if axis.pending is not None:
                pend.append((axis.name, axis.pending[0].tolist(), axis.pending[1]))
        return ActuatorState(
            t_s=self.t,
            commanded_mm=float(self.pitch.commanded[0]),
            actual_mm=float(self.pitch.actual[0]),
            velocity_mm_per_s=float(self.pitch.velocity[0]),
            commanded_tilt_rad=tuple(float(x) for x in self.tilt.commanded),
            actual_tilt_rad=tuple(float(x) for x in self.tilt.actual),
            pending=pend,
            travel_limits_mm=(-self.config.travel_mm, self.config.travel_mm),
        )

    def trace_row(self):
        return (self.t, float(self.pitch.commanded[0]), float(self.pitch.actual[0]),
                float(self.pitch.velocity[0]), float(self.tilt.commanded[0]),
                float(self.tilt.actual[0]), float(self.tilt.commanded[1]), float(self.tilt.actual[1]))


TRACE_COLUMNS = ("t_s", "commanded_mm", "actual_mm", "velocity_mm_s",
                 "commanded_tilt_roll_rad", "actual_tilt_roll_rad",
                 "commanded_tilt_pitch_rad", "actual_tilt_pitch_rad")
