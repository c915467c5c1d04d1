"""Per-packet link budget and the Doppler-degraded packet error model.

Error probability per packet::

    p = exp(-beta * snr_lin / (1 + (detune / f_s)^2))

``beta`` and ``f_s`` are fitted to bench anchors (see fit_beta_and_scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .antenna import axial_gain_linear, reference_geometry
from .channel import free_space_loss_1m_db
from .constants import CARRIERS_HZ, F0_HZ, SPEED_OF_LIGHT
from .errors import ConfigurationError, FittingError

# (detune Hz, SNR dB, PER) measured on the bench with a fixed transceiver
BENCH_ANCHORS = ((0.0, 12.0, 0.165), (600.0, 12.0, 0.32))
BENCH_SNR_DB = 12.0


@dataclass(frozen=True)
class RfConfig:
    carrier_hz: float = F0_HZ
    tx_power_dbm: float = 20.0
    noise_floor_dbm: float = -105.0
    rx_gain_dbi: float = 2.0
    packet_rate_hz: float = 250.0
    beta: float | None = None
    detune_scale_hz: float | None = None

    def __post_init__(self):
        if self.carrier_hz not in CARRIERS_HZ:
            raise ConfigurationError(f"carrier must be one of {CARRIERS_HZ}, got {self.carrier_hz}")
        if self.packet_rate_hz <= 0:
            raise ConfigurationError("packet rate must be positive")
        if self.beta is not None and self.beta <= 0:
            raise ConfigurationError("beta must be positive")
        if self.detune_scale_hz is not None and self.detune_scale_hz <= 0:
            raise ConfigurationError("detune scale must be positive")

    @property
    def fitted(self):
        return self.beta is not None and self.detune_scale_hz is not None

    def with_fit(self, anchors=BENCH_ANCHORS):
        beta, scale = fit_beta_and_scale(anchors)
        return replace(self, beta=beta, detune_scale_hz=scale)


def default_rf_config(carrier_hz=F0_HZ, **overrides):
    return RfConfig(carrier_hz=carrier_hz, **overrides).with_fit()


@dataclass
class LinkSample:
    t_s: float
    doppler_hz: float
    effective_detune_hz: float
    vswr: float
    mismatch_loss_db: float
    fade_db: float
    snr_db: float
    rssi_dbm: float
    error_probability: float
    errored: bool


def rssi_dbm(cfg, tx_gain_dbi, path_loss_db, fade_db, mismatch_loss_db):
    return cfg.tx_power_dbm + tx_gain_dbi + cfg.rx_gain_dbi - path_loss_db + fade_db - mismatch_loss_db


def effective_snr_db(cfg, tx_gain_dbi, path_loss_db, fade_db, mismatch_loss_db):
    return rssi_dbm(cfg, tx_gain_dbi, path_loss_db, fade_db, mismatch_loss_db) - cfg.noise_floor_dbm


def packet_error_probability(snr_db, effective_detune_hz, cfg):
    if not cfg.fitted:
        raise ConfigurationError("RF config has no fitted beta / detune scale")
    snr_lin = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    x = np.asarray(effective_detune_hz, dtype=float) / cfg.detune_scale_hz
    p = np.exp(-cfg.beta * snr_lin / (1.0 + x * x))
    return float(p) if p.ndim == 0 else p


def fit_beta_and_scale(bench_anchors):
    """Fit (beta, f_s) from (detune_hz, snr_db, per) anchors.

    beta comes from the zero-detune anchors; f_s from the offset anchors, each
    solved in closed form and averaged (in 1/f_s^2) when several are given.
    A set with only zero-detune anchors returns f_s = inf.
    """
    anchors = [tuple(map(float, a)) for a in bench_anchors]
    if not anchors:
        raise FittingError("need at least one anchor")
    for df, _, per in anchors:
        if not 0.0 < per < 1.0:
            raise FittingError(f"PER anchor {per} outside (0, 1)")
    zero = [a for a in anchors if abs(a[0]) < 1e-9]
    offset = [a for a in anchors if abs(a[0]) >= 1e-9]
    if not zero:
        raise FittingError("need an anchor at zero detune")

    betas = [-math.log(per) / 10.0 ** (snr / 10.0) for _, snr, per in zero]
    beta = float(np.mean(betas))

    inv_sq = []
    for df, snr, per in offset:
        ratio = beta * 10.0 ** (snr / 10.0) / -math.log(per)  # = 1 + (df/f_s)^2
        if ratio <= 1.0:
            raise FittingError(f"offset anchor {df} Hz implies no Doppler degradation")
        inv_sq.append((ratio - 1.0) / df**2)
    scale = math.inf if not inv_sq else 1.0 / math.sqrt(float(np.mean(inv_sq)))
    return beta, scale


def boresight_gain_dbi(carrier_hz=F0_HZ):
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return 10.0 * math.log10(axial_gain_linear(reference_geometry(carrier_hz), wavelength))


def bench_reference_distance(cfg, path_loss_exponent=2.0, snr_db=BENCH_SNR_DB):
    """Distance at which the matched, unfaded budget yields ``snr_db``."""
    budget = cfg.tx_power_dbm + boresight_gain_dbi(cfg.carrier_hz) + cfg.rx_gain_dbi - cfg.noise_floor_dbm
    excess = budget - snr_db - free_space_loss_1m_db(cfg.carrier_hz)
    return 10.0 ** (excess / (10.0 * path_loss_exponent))


def draw_errors(p, rng):
    return rng.random(np.shape(p)) < p
