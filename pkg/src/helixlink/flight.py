"""Parametric flight trajectories sampled as FlightState streams.

All profiles are closed-form in time, so sampling at any rate is exact and
consistent between the packet, controller and kinematic clocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import radial_velocity
from .constants import G0, MPH_TO_MPS
from .errors import ConfigurationError, DomainError

MAX_SPEED_MPS = 90.0
MAX_BANK_RAD = math.radians(60.0)
RECEIVER_OFFSET_M = 500.0
RECEIVER_HEIGHT_M = 2.0
KINEMATIC_RATE_HZ = 1000.0


class ProfileKind(str, Enum):
    SPRINT = "sprint"
    CIRCUIT = "circuit"
    ALTITUDE_SWEEP = "altitude_sweep"


@dataclass(frozen=True)
class FlightState:
    t_s: float
    position_m: np.ndarray
    velocity_mps: np.ndarray
    attitude: tuple[float, float, float]  # roll, pitch, yaw (rad)
    yaw_rate_rad_s: float

    @property
    def speed_mps(self):
        return float(np.linalg.norm(self.velocity_mps))


@dataclass
class FlightTrack:
    """Column-oriented samples of a profile."""
    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    yaw: np.ndarray
    yaw_rate: np.ndarray

    def __len__(self):
        return len(self.t)

    def state(self, i):
        return FlightState(float(self.t[i]), self.position[i].copy(), self.velocity[i].copy(),
                           (float(self.roll[i]), float(self.pitch[i]), float(self.yaw[i])),
                           float(self.yaw_rate[i]))


@dataclass(frozen=True)
class FlightProfile:
    kind: ProfileKind
    speed_mps: float
    acceleration_mps2: float = 20.0
    cruise_s: float = 4.0
    turn_radius_m: float = 200.0
    straight_m: float = 300.0
    laps: float = 1.0
    altitude_m: float = 30.0
    altitude_band_m: tuple[float, float] = (10.0, 100.0)
    sweep_period_s: float = 20.0
    sweep_duration_s: float = 30.0
    heading_rad: float = 0.0
    center_m: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.speed_mps < 0 or self.speed_mps > MAX_SPEED_MPS:
            raise ConfigurationError(f"speed must lie in [0, {MAX_SPEED_MPS}] m/s")
        for name in ("acceleration_mps2", "cruise_s", "turn_radius_m", "laps",
                     "sweep_period_s", "sweep_duration_s"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.straight_m < 0 or self.altitude_m <= 0:
            raise ConfigurationError("straight length must be >= 0 and altitude positive")
        lo, hi = self.altitude_band_m
        if not 0 < lo < hi:
            raise ConfigurationError("altitude band must satisfy 0 < low < high")
        if self.kind is ProfileKind.CIRCUIT:
            if self.speed_mps == 0:
                raise ConfigurationError("circuit speed must be positive")
            if self.bank_rad > MAX_BANK_RAD + 1e-12:
                raise ConfigurationError(
                    f"circuit bank {math.degrees(self.bank_rad):.1f} deg exceeds 60 deg")
        if self.kind is ProfileKind.ALTITUDE_SWEEP:
            amp, _ = self._sweep_band()
            climb = amp * 2 * math.pi / self.sweep_period_s
            if math.hypot(self.speed_mps, climb) > MAX_SPEED_MPS:
                raise ConfigurationError("altitude sweep exceeds the 90 m/s envelope")

    @property
    def bank_rad(self):
        return math.atan(self.speed_mps**2 / (G0 * self.turn_radius_m))

    @property
    def lap_length_m(self):
        return 2.0 * self.straight_m + 2.0 * math.pi * self.turn_radius_m

    @property
    def lap_time_s(self):
        return self.lap_length_m / self.speed_mps

    @property
    def ramp_s(self):
        if self.kind is not ProfileKind.SPRINT or self.speed_mps == 0:
            return 0.0
        return self.speed_mps / self.acceleration_mps2

    @property
    def duration_s(self):
        if self.kind is ProfileKind.SPRINT:
            return self.ramp_s + self.cruise_s
        if self.kind is ProfileKind.CIRCUIT:
            return self.laps * self.lap_time_s
        return self.sweep_duration_s

    @property
    def measure_start_s(self):
        """Start of the steady-speed window used for per-speed statistics."""
        return self.ramp_s

    def _sweep_band(self):
        lo, hi = self.altitude_band_m
        return 0.5 * (hi - lo), 0.5 * (hi + lo)

    @property
    def heading_unit(self):
        return np.array([math.cos(self.heading_rad), math.sin(self.heading_rad), 0.0])


def sprint_profile(speed_mps, acceleration_mps2=20.0, cruise_s=4.0, **kw):
    return FlightProfile(ProfileKind.SPRINT, speed_mps, acceleration_mps2=acceleration_mps2,
                         cruise_s=cruise_s, **kw)


def circuit_profile(speed_mps, turn_radius_m, straight_m=300.0, laps=1.0, **kw):
    return FlightProfile(ProfileKind.CIRCUIT, speed_mps, turn_radius_m=turn_radius_m,
                         straight_m=straight_m, laps=laps, **kw)


def altitude_sweep_profile(speed_mps, band_m=(10.0, 100.0), period_s=20.0, duration_s=30.0, **kw):
    return FlightProfile(ProfileKind.ALTITUDE_SWEEP, speed_mps, altitude_band_m=band_m,
                         sweep_period_s=period_s, sweep_duration_s=duration_s, **kw)


def default_receiver(profile, offset_m=RECEIVER_OFFSET_M, height_m=RECEIVER_HEIGHT_M):
    """Receiver ``offset_m`` from the course centre along the heading."""
    cx, cy = profile.center_m
    u = profile.heading_unit
    return np.array([cx + offset_m * u[0], cy + offset_m * u[1], height_m])


def _rotate(profile, along, across):
    c, s = math.cos(profile.heading_rad), math.sin(profile.heading_rad)
    return along * c - across * s, along * s + across * c


def _sprint(profile, t):
    v, a = profile.speed_mps, profile.acceleration_mps2
    t1 = profile.ramp_s
    ramp_len = 0.5 * a * t1**2
    start = -(ramp_len + 0.5 * v * profile.cruise_s)
    s = np.where(t < t1, 0.5 * a * t**2, ramp_len + v * (t - t1))
    speed = np.where(t < t1, a * t, v)
    n = t.shape[0]
    x, y = _rotate(profile, start + s, np.zeros(n))
    vx, vy = _rotate(profile, speed, np.zeros(n))
    zeros = np.zeros(n)
    return (np.column_stack([x, y, np.full(n, profile.altitude_m)]),
            np.column_stack([vx, vy, zeros]), zeros, zeros, np.full(n, profile.heading_rad), zeros)


def _circuit(profile, t):
    v, r, L = profile.speed_mps, profile.turn_radius_m, profile.straight_m
    arc = math.pi * r
    s = np.mod(v * t, profile.lap_length_m)
    seg1 = s < L
    seg2 = (s >= L) & (s < L + arc)
    seg3 = (s >= L + arc) & (s < 2 * L + arc)
    seg4 = s >= 2 * L + arc

    phi2 = -math.pi / 2 + (s - L) / r
    phi4 = math.pi / 2 + (s - 2 * L - arc) / r
    along = np.select([seg1, seg2, seg3, seg4],
                      [-L / 2 + s, L / 2 + r * np.cos(phi2), L / 2 - (s - L - arc), -L / 2 + r * np.cos(phi4)])
    across = np.select([seg1, seg2, seg3, seg4], [np.full_like(s, -r), r * np.sin(phi2), np.full_like(s, r),
                                                  r * np.sin(phi4)])
    track = np.select([seg1, seg2, seg3, seg4], [np.zeros_like(s), phi2 + math.pi / 2, np.full_like(s, math.pi),
                                                 phi4 + math.pi / 2])
    turning = seg2 | seg4
    yaw_rate = np.where(turning, v / r, 0.0)
    roll = np.arctan(v * yaw_rate / G0)

    x, y = _rotate(profile, along, across)
    cx, cy = profile.center_m
    yaw = profile.heading_rad + track
    n = t.shape[0]
    pos = np.column_stack([cx + x, cy + y, np.full(n, profile.altitude_m)])
    vel = np.column_stack([v * np.cos(yaw), v * np.sin(yaw), np.zeros(n)])
    return pos, vel, roll, np.zeros(n), yaw, yaw_rate


def _altitude_sweep(profile, t):
    v = profile.speed_mps
    amp, mid = profile._sweep_band()
    w = 2 * math.pi / profile.sweep_period_s
    along = -0.5 * v * profile.sweep_duration_s + v * t
    n = t.shape[0]
    x, y = _rotate(profile, along, np.zeros(n))
    vx, vy = _rotate(profile, np.full(n, v), np.zeros(n))
    cx, cy = profile.center_m
    pos = np.column_stack([cx + x, cy + y, mid + amp * np.sin(w * t)])
    vel = np.column_stack([vx, vy, amp * w * np.cos(w * t)])
    zeros = np.zeros(n)
    return pos, vel, zeros, zeros, np.full(n, profile.heading_rad), zeros


_SAMPLERS = {ProfileKind.SPRINT: _sprint, ProfileKind.CIRCUIT: _circuit,
             ProfileKind.ALTITUDE_SWEEP: _altitude_sweep}


def sample_track(profile, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0) or np.any(t > profile.duration_s + 1e-9):
        raise DomainError(f"time outside [0, {profile.duration_s}] s")
    pos, vel, roll, pitch, yaw, yaw_rate = _SAMPLERS[profile.kind](profile, t)
    return FlightTrack(t, pos, vel, roll, pitch, yaw, yaw_rate)


def sample(profile, t_s):
    return sample_track(profile, [t_s]).state(0)


def time_grid(profile, rate_hz):
    n = int(math.floor(profile.duration_s * rate_hz + 1e-9)) + 1
    return np.arange(n) / rate_hz


def radial_speed_trace(profile, rx_pos, sample_rate_hz):
    """(t, v_r) pairs, positive when closing on the receiver."""
    if sample_rate_hz <= 0:
        raise ConfigurationError("sample rate must be positive")
    t = time_grid(profile, sample_rate_hz)
    track = sample_track(profile, t)
    return t, radial_velocity(track.velocity, track.position, rx_pos)


def mph(speed_mps):
    return speed_mps / MPH_TO_MPS
