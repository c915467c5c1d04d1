"""Closed-form model of the axial-mode helix.

Geometry maps to pitch angle, boresight gain, an off-axis cosine-power
pattern, a resonant frequency and the VSWR seen under carrier detuning.
Everything here is a pure function of value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .constants import F0_HZ, MPH_TO_MPS, SPEED_OF_LIGHT
from .errors import DomainError

MAX_TILT_RAD = math.pi / 4

REFERENCE_PITCH_ANGLE_DEG = 14.0
REFERENCE_TURNS = 10
REFERENCE_CONDUCTOR_WIDTH_M = 1e-3

# actuator pitch travel around S_ref and the retune span it buys
PITCH_TRAVEL_M = 2e-3
RETUNE_SPAN_HZ = 1000.0

PATTERN_DROP_AT_45_DB = -2.0
PATTERN_FLOOR_DB = -15.0
PATTERN_EPS = 1e-6

VSWR_MIN = 1.20
VSWR_CAP = 3.0


def _doppler_at_mph(mph, f0_hz=F0_HZ):
    return f0_hz * mph * MPH_TO_MPS / SPEED_OF_LIGHT


# (detune Hz, VSWR) anchors taken from the static-antenna flight results
VSWR_ANCHORS = (
    (0.0, VSWR_MIN),
    (_doppler_at_mph(120.0), 2.00),
    (_doppler_at_mph(180.0), 2.30),
)


@dataclass(frozen=True)
class HelixGeometry:
    diameter_m: float
    pitch_spacing_m: float
    turns: int = REFERENCE_TURNS
    conductor_width_m: float = REFERENCE_CONDUCTOR_WIDTH_M
    tilt_rad: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.diameter_m > 0 and self.pitch_spacing_m > 0 and self.conductor_width_m > 0):
            raise DomainError(f"helix dimensions must be positive: {self}")
        if int(self.turns) != self.turns or self.turns < 1:
            raise DomainError(f"turns must be a positive integer, got {self.turns}")
        if len(self.tilt_rad) != 2 or any(abs(t) > MAX_TILT_RAD + 1e-12 for t in self.tilt_rad):
            raise DomainError(f"tilt components limited to +/-45 deg, got {self.tilt_rad}")

    @property
    def circumference_m(self):
        return math.pi * self.diameter_m

    def with_pitch(self, pitch_spacing_m):
        return replace(self, pitch_spacing_m=pitch_spacing_m)


@dataclass(frozen=True)
class AntennaResponse:
    resonant_frequency_hz: float
    boresight_gain_dbi: float
    vswr: float
    reflection_coefficient: float


@dataclass(frozen=True)
class TuningSensitivity:
    """Linear pitch-to-resonance calibration around a reference geometry.

    ``k_s`` is chosen so that moving the pitch by the full one-sided
    actuator travel retunes the resonance by ``span_hz``.
    """

    s_ref_m: float
    f0_hz: float = F0_HZ
    travel_m: float = PITCH_TRAVEL_M
    span_hz: float = RETUNE_SPAN_HZ
    k_s: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "k_s", self.span_hz * self.s_ref_m / (self.f0_hz * self.travel_m))

    @property
    def hz_per_m(self):
        # resonance slope at the reference diameter (negative: longer pitch, lower f)
        return -self.f0_hz * self.k_s / self.s_ref_m

    def pitch_for_offset(self, offset_hz):
        """Pitch spacing that puts the reference helix at ``f0 + offset_hz``."""
        return self.s_ref_m + offset_hz / self.hz_per_m


def reference_geometry(f0_hz=F0_HZ):
    """Reference helix with C equal to the carrier wavelength and a 14 deg pitch angle."""
    wavelength = SPEED_OF_LIGHT / f0_hz
    diameter = wavelength / math.pi
    pitch = wavelength * math.tan(math.radians(REFERENCE_PITCH_ANGLE_DEG))
    return HelixGeometry(diameter_m=diameter, pitch_spacing_m=pitch)


def reference_sensitivity(f0_hz=F0_HZ):
    return TuningSensitivity(s_ref_m=reference_geometry(f0_hz).pitch_spacing_m, f0_hz=f0_hz)


def pitch_angle(geometry):
    return math.atan(geometry.pitch_spacing_m / geometry.circumference_m)


def axial_gain_linear(geometry, wavelength_m):
    """Approximate axial gain N (C/lambda)^2 sin^2(alpha), linear units."""
    if wavelength_m <= 0:
        raise DomainError("wavelength must be positive")
    ratio = geometry.circumference_m / wavelength_m
    return geometry.turns * ratio**2 * math.sin(pitch_angle(geometry)) ** 2


def axial_gain_dbi(diameter_m, pitch_spacing_m, turns, wavelength_m):
    """Vectorised boresight gain in dBi over arrays of pitch spacing."""
    circumference = np.pi * diameter_m
    alpha = np.arctan(np.asarray(pitch_spacing_m) / circumference)
    return 10.0 * np.log10(turns * (circumference / wavelength_m) ** 2 * np.sin(alpha) ** 2)


def resonant_frequency(geometry, cal):
    base = SPEED_OF_LIGHT / geometry.circumference_m
    return base * (1.0 - cal.k_s * (geometry.pitch_spacing_m - cal.s_ref_m) / cal.s_ref_m)


def resonant_frequency_array(diameter_m, pitch_spacing_m, cal):
    base = SPEED_OF_LIGHT / (np.pi * diameter_m)
    return base * (1.0 - cal.k_s * (np.asarray(pitch_spacing_m) - cal.s_ref_m) / cal.s_ref_m)


def pattern_exponent(drop_db=PATTERN_DROP_AT_45_DB, angle_rad=math.pi / 4):
    """Cosine-power exponent giving ``drop_db`` at ``angle_rad`` off axis."""
    return drop_db / (10.0 * math.log10(math.cos(angle_rad)))


PATTERN_EXPONENT = pattern_exponent()


def gain_pattern_db(off_axis_angle_rad, exponent=PATTERN_EXPONENT):
    """Relative gain (dB) of a cos^n main lobe, floored at -15 dB.

    Accepts scalars or arrays. The geometry does not enter: the lobe shape is
    pinned to the one measured off-axis drop.
    """
    theta = np.asarray(off_axis_angle_rad, dtype=float)
    g = exponent * 10.0 * np.log10(np.maximum(np.cos(theta), PATTERN_EPS))
    g = np.maximum(g, PATTERN_FLOOR_DB)
    return float(g) if g.ndim == 0 else g


def _build_vswr_curve():
    xs = [a for a, _ in VSWR_ANCHORS]
    ys = [v for _, v in VSWR_ANCHORS]
    # mirror so the interpolant is even with zero slope at the origin
    x = np.array([-v for v in xs[:0:-1]] + xs)
    y = np.array(ys[:0:-1] + ys)
    return PchipInterpolator(x, y, extrapolate=False)


_VSWR_CURVE = _build_vswr_curve()
_VSWR_EDGE_HZ = VSWR_ANCHORS[-1][0]
_VSWR_EDGE = VSWR_ANCHORS[-1][1]
_VSWR_EDGE_SLOPE = float(_VSWR_CURVE.derivative()(_VSWR_EDGE_HZ))


def vswr_curve(detune_hz):
    """Vectorised VSWR versus detune: monotone cubic inside the anchors,
    linear beyond them, clamped to [1, 3]."""
    d = np.abs(np.asarray(detune_hz, dtype=float))
    inside = np.minimum(d, _VSWR_EDGE_HZ)
    v = _VSWR_CURVE(inside)
    v = np.where(d > _VSWR_EDGE_HZ, _VSWR_EDGE + _VSWR_EDGE_SLOPE * (d - _VSWR_EDGE_HZ), v)
    v = np.clip(v, 1.0, VSWR_CAP)
    return float(v) if v.ndim == 0 else v


def reflection_coefficient(vswr):
    vswr = np.asarray(vswr, dtype=float)
    gamma = (vswr - 1.0) / (vswr + 1.0)
    return float(gamma) if gamma.ndim == 0 else gamma


def vswr_from_reflection(gamma):
    return (1.0 + gamma) / (1.0 - gamma)


def vswr_at_detuning(detune_hz, geometry=None, cal=None):
    """Antenna response when the carrier sits ``detune_hz`` off resonance.

    Resonance and gain are reported for ``geometry`` (reference helix by
    default) so the record is self-contained.
    """
    if geometry is None:
        geometry = reference_geometry()
    if cal is None:
        cal = reference_sensitivity()
    vswr = vswr_curve(detune_hz)
    f_res = resonant_frequency(geometry, cal)
    gain = axial_gain_linear(geometry, SPEED_OF_LIGHT / f_res)
    return AntennaResponse(
        resonant_frequency_hz=f_res,
        boresight_gain_dbi=10.0 * math.log10(gain),
        vswr=vswr,
        reflection_coefficient=reflection_coefficient(vswr),
    )


def mismatch_loss_db(vswr):
    """Power lost to reflection, -10 log10(1 - |Gamma|^2), in dB."""
    vswr = np.asarray(vswr, dtype=float)
    if np.any(vswr < 1.0):
        raise DomainError("VSWR must be >= 1")
    gamma = (vswr - 1.0) / (vswr + 1.0)
    loss = -10.0 * np.log10(1.0 - gamma**2)
    return float(loss) if loss.ndim == 0 else loss


def return_loss_db(vswr):
    gamma = reflection_coefficient(vswr)
    return -20.0 * np.log10(gamma)
