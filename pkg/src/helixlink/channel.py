"""Doppler, log-distance path loss and time-correlated Rician/Rayleigh fading."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import ConfigurationError, DegenerateGeometryError


class EnvironmentKind(str, Enum):
    OPEN_FIELD = "open_field"
    SUBURBAN = "suburban"
    URBAN = "urban"


@dataclass(frozen=True)
class ChannelEnvironment:
    kind: EnvironmentKind
    rician_k_db: float
    n_scatterers: int = 16
    path_loss_exponent: float = 2.0
    shadowing_sigma_db: float = 0.0
    shadowing_decorrelation_m: float = 10.0
    # hover drift and moving scatterers keep the channel from freezing at zero speed
    ambient_doppler_hz: float = 5.0

    def __post_init__(self):
        if self.n_scatterers < 8:
            raise ConfigurationError("n_scatterers must be >= 8")
        if not 1.8 <= self.path_loss_exponent <= 4.5:
            raise ConfigurationError("path_loss_exponent must lie in [1.8, 4.5]")
        if math.isnan(self.rician_k_db) or (self.rician_k_db > 20 and not math.isinf(self.rician_k_db)):
            raise ConfigurationError("rician_k_db must be -inf (Rayleigh), finite <= 20, or +inf (pure LOS)")
        if self.ambient_doppler_hz < 0:
            raise ConfigurationError("ambient_doppler_hz must be non-negative")
        if self.shadowing_sigma_db < 0 or self.shadowing_decorrelation_m <= 0:
            raise ConfigurationError("shadowing parameters must be non-negative / positive")

    @property
    def k_linear(self):
        return 10.0 ** (self.rician_k_db / 10.0)


ENVIRONMENTS = {
    EnvironmentKind.OPEN_FIELD: ChannelEnvironment(
        EnvironmentKind.OPEN_FIELD, rician_k_db=12.0, path_loss_exponent=2.0, shadowing_sigma_db=1.0),
    EnvironmentKind.SUBURBAN: ChannelEnvironment(
        EnvironmentKind.SUBURBAN, rician_k_db=6.0, path_loss_exponent=2.7, shadowing_sigma_db=2.0),
    EnvironmentKind.URBAN: ChannelEnvironment(
        EnvironmentKind.URBAN, rician_k_db=0.0, path_loss_exponent=3.2, shadowing_sigma_db=0.6),
}

ENV_ALIASES = {"open": EnvironmentKind.OPEN_FIELD, "open_field": EnvironmentKind.OPEN_FIELD,
               "suburban": EnvironmentKind.SUBURBAN, "urban": EnvironmentKind.URBAN}


def environment(kind):
    if isinstance(kind, ChannelEnvironment):
        return kind
    try:
        key = kind if isinstance(kind, EnvironmentKind) else ENV_ALIASES[str(kind)]
    except KeyError:
        raise ConfigurationError(f"unknown environment {kind!r}") from None
    return ENVIRONMENTS[key]


@dataclass(frozen=True)
class DopplerState:
    radial_velocity_mps: float
    shift_hz: float
    max_spread_hz: float


def _unit_los(drone_pos, rx_pos):
    los = np.asarray(rx_pos, dtype=float) - np.asarray(drone_pos, dtype=float)
    dist = np.linalg.norm(los, axis=-1, keepdims=True)
    if np.any(dist == 0.0):
        raise DegenerateGeometryError("drone and receiver positions coincide")
    return los / dist, dist[..., 0]


def doppler_shift(velocity_mps, drone_pos_m, rx_pos_m, f0_hz):
    """Doppler state for one instant; the shift is positive while closing."""
    if f0_hz <= 0:
        raise ConfigurationError("carrier frequency must be positive")
    v = np.asarray(velocity_mps, dtype=float)
    unit, _ = _unit_los(drone_pos_m, rx_pos_m)
    v_r = float(np.dot(v, unit))
    return DopplerState(
        radial_velocity_mps=v_r,
        shift_hz=f0_hz * v_r / SPEED_OF_LIGHT,
        max_spread_hz=f0_hz * float(np.linalg.norm(v)) / SPEED_OF_LIGHT,
    )


def radial_velocity(velocity, drone_pos, rx_pos):
    """Row-wise radial speed toward ``rx_pos`` for (n, 3) arrays."""
    unit, _ = _unit_los(drone_pos, rx_pos)
    return np.einsum("ij,ij->i", np.asarray(velocity, dtype=float), unit)


def slant_range(drone_pos, rx_pos):
    return np.linalg.norm(np.asarray(rx_pos, dtype=float) - np.asarray(drone_pos, dtype=float), axis=-1)


def free_space_loss_1m_db(f0_hz):
    return 20.0 * math.log10(4.0 * math.pi * f0_hz / SPEED_OF_LIGHT)


def path_loss_db(distance_m, env, f0_hz):
    """Log-distance path loss referenced to free space at 1 m; shorter
    distances are clamped to the reference."""
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    loss = free_space_loss_1m_db(f0_hz) + 10.0 * env.path_loss_exponent * np.log10(d)
    return float(loss) if loss.ndim == 0 else loss


class FadingProcess:
    """Sum-of-sinusoids complex envelope with an optional LOS ray.

    Each of the ``n`` scattered rays arrives at a uniform random angle and
    carries a complex Gaussian gain, so at any instant the scattered part is
    exactly circular Gaussian (Rayleigh envelope) and the total envelope is
    Rician with the environment's K. Phases are driven by the integrated
    maximum Doppler, which lets speed vary along a trajectory.
    """

    def __init__(self, env, rng, los_direction_cos=1.0):
        n = env.n_scatterers
        k = env.k_linear
        self.los_amp = 1.0 if math.isinf(k) else math.sqrt(k / (k + 1.0))
        self.scatter_amp = 0.0 if math.isinf(k) else math.sqrt(1.0 / (k + 1.0))
        self.cos_angles = np.cos(rng.uniform(0.0, 2.0 * math.pi, n))
        self.gains = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0 * n)
        self.los_phase = rng.uniform(0.0, 2.0 * math.pi)
        self.los_direction_cos = los_direction_cos

    def envelope(self, spread_cycles, los_cycles=None):
        """Complex gain h given the integrated max Doppler (cycles) and the
        integrated LOS Doppler (defaults to the full spread)."""
        spread_cycles = np.asarray(spread_cycles, dtype=float)
        if los_cycles is None:
            los_cycles = self.los_direction_cos * spread_cycles
        h = self.los_amp * np.exp(1j * (2.0 * math.pi * np.asarray(los_cycles) + self.los_phase))
        if self.scatter_amp > 0.0:
            phase = 2.0 * math.pi * np.multiply.outer(spread_cycles, self.cos_angles)
            h = h + self.scatter_amp * (np.exp(1j * phase) @ self.gains)
        return h

    def fade_db(self, spread_cycles, los_cycles=None):
        h = self.envelope(spread_cycles, los_cycles)
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(h))


def fading_sample_db(env, t_s, max_doppler_hz, rng_stream):
    """Fade (dB) at time(s) ``t_s`` for a process drawn from ``rng_stream``
    with a constant maximum Doppler."""
    if max_doppler_hz < 0:
        raise ConfigurationError("max Doppler must be non-negative")
    proc = FadingProcess(env, rng_stream)
    out = proc.fade_db(max_doppler_hz * np.asarray(t_s, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


class ShadowingProcess:
    """Log-normal shadowing, AR(1) in distance travelled (Gudmundson)."""

    def __init__(self, env, rng):
        self.sigma = env.shadowing_sigma_db
        self.d_corr = env.shadowing_decorrelation_m
        self.rng = rng

    def trace(self, distance_travelled_m):
        d = np.asarray(distance_travelled_m, dtype=float)
        out = np.zeros(d.shape)
        if self.sigma == 0.0 or d.size == 0:
            return out
        w = self.rng.standard_normal(d.size)
        rho = np.exp(-np.diff(d, prepend=d[0]) / self.d_corr)
        innov = self.sigma * np.sqrt(1.0 - rho**2) * w
        x = self.sigma * w[0]
        out[0] = x
        for i in range(1, d.size):
            x = rho[i] * x + innov[i]
            out[i] = x
        return out


def composite_channel(env, flight, rx_pos, f0_hz, rng_stream):
    """Doppler state, fade (dB) and path loss (dB) at one flight instant.

    The fade includes shadowing; small-scale phases assume the current
    speed has held since t = 0.
    """
    dop = doppler_shift(flight.velocity_mps, flight.position_m, rx_pos, f0_hz)
    fading_rng, shadow_rng = rng_stream.spawn(2)
    proc = FadingProcess(env, fading_rng, los_direction_cos=_los_cos(dop))
    fade = float(proc.fade_db(dop.max_spread_hz * flight.t_s))
    if env.shadowing_sigma_db > 0:
        fade += env.shadowing_sigma_db * float(shadow_rng.standard_normal())
    dist = float(slant_range(flight.position_m, rx_pos))
    return dop, fade, path_loss_db(dist, env, f0_hz)


def _los_cos(dop):
    if dop.max_spread_hz == 0.0:
        return 1.0
    return dop.shift_hz / dop.max_spread_hz
