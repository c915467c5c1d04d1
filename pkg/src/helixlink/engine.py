"""Per-run simulation loop, Monte Carlo sweeps and the bench Doppler test."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import uniform_filter1d

from .actuation import Actuator, ActuatorConfig
from .antenna import (TuningSensitivity, reference_sensitivity, axial_gain_dbi, gain_pattern_db, mismatch_loss_db,
                      resonant_frequency_array, vswr_curve)
from .channel import FadingProcess, ShadowingProcess, path_loss_db, radial_velocity, slant_range
from .config import ScenarioConfig
from .constants import F0_HZ, G0, MPH_TO_MPS, SPEED_OF_LIGHT
from .control import (CalibrationTable, ControlMode, Controller, ControllerConfig,
                      build_calibration_table, off_axis_angle)
from .errors import AggregationError, ConfigurationError
from .flight import FlightState, default_receiver, sample_track
from .link import BENCH_SNR_DB, LinkSample, default_rf_config, draw_errors, effective_snr_db, \
    packet_error_probability, rssi_dbm
from .stats import compare_modes, polynomial_fit

log = logging.getLogger(__name__)

MODES = (ControlMode.STATIC, ControlMode.TUNED)
DEFAULT_SPEEDS_MPH = (0.0, 50.0, 100.0, 150.0, 180.0)
DEFAULT_BENCH_OFFSETS_HZ = (0.0, 200.0, 400.0, 600.0, 800.0)
RSSI_PERCENTILES = (2.5, 97.5)
THREADS_ENV = "HELIX_SIM_THREADS"


def derive_seed(base_seed, *indices):
    """64-bit run seed mixed from the base seed and (speed, mode, run) indices."""
    ss = np.random.SeedSequence([int(base_seed) & (2**64 - 1), *map(int, indices)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class PacketLog:
    """Column-oriented per-packet records for one run."""
    t_s: np.ndarray
    doppler_hz: np.ndarray
    effective_detune_hz: np.ndarray
    vswr: np.ndarray
    mismatch_loss_db: np.ndarray
    tx_gain_dbi: np.ndarray
    fade_db: np.ndarray
    snr_db: np.ndarray
    rssi_dbm: np.ndarray
    error_probability: np.ndarray
    errored: np.ndarray

    def __len__(self):
        return len(self.t_s)

    def select(self, mask):
        return PacketLog(**{k: v[mask] for k, v in self.__dict__.items()})

    def samples(self):
        for i in range(len(self)):
            yield LinkSample(float(self.t_s[i]), float(self.doppler_hz[i]),
                             float(self.effective_detune_hz[i]), float(self.vswr[i]),
                             float(self.mismatch_loss_db[i]), float(self.fade_db[i]),
                             float(self.snr_db[i]), float(self.rssi_dbm[i]),
                             float(self.error_probability[i]), bool(self.errored[i]))


PACKET_COLUMNS = ("t_s", "doppler_hz", "effective_detune_hz", "vswr", "mismatch_loss_db",
                  "tx_gain_dbi", "fade_db", "snr_db", "rssi_dbm", "error_probability", "errored")


@dataclass
class RunMetrics:
    per: float
    packets_total: int
    packets_errored: int
    rssi_p95_range_db: float
    rssi_std_db: float
    vswr_mean: float
    vswr_max: float
    mean_effective_detune_hz: float
    actuator_trace: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.packets_total <= 0 or not 0 <= self.packets_errored <= self.packets_total:
            raise AggregationError("inconsistent packet counts")


METRIC_COLUMNS = ("per", "packets_total", "packets_errored", "rssi_p95_range_db", "rssi_std_db",
                  "vswr_mean", "vswr_max", "mean_effective_detune_hz")


@dataclass
class RunResult:
    seed: int
    metrics: RunMetrics
    packets: PacketLog
    decisions: list


def reported_rssi(log_, window_packets=1, detrend_path_loss=None):
    """RSSI as the receiver reports it: a moving average of linear power over
    ``window_packets`` packets, optionally with the distance trend removed."""
    r = np.asarray(log_.rssi_dbm if isinstance(log_, PacketLog) else log_, dtype=float)
    if detrend_path_loss is not None:
        pl = np.asarray(detrend_path_loss, dtype=float)
        r = r + pl - pl.mean()
    if window_packets > 1 and r.size >= window_packets:
        lin = uniform_filter1d(10.0 ** (r / 10.0), size=int(window_packets), mode="nearest")
        r = 10.0 * np.log10(lin)
    return r


def aggregate(samples, rssi=None, actuator_trace=None):
    """Reduce a packet stream to RunMetrics.

    ``samples`` is a PacketLog or an iterable of LinkSample. ``rssi`` overrides
    the per-packet RSSI used for the stability metrics (for example a smoothed,
    detrended report); the p95 range spans the 2.5th to 97.5th percentile.
    """
    if not isinstance(samples, PacketLog):
        samples = list(samples)
        if not samples:
            raise AggregationError("empty sample stream")
        cols = {k: np.array([getattr(s, k) for s in samples]) for k in
                ("t_s", "doppler_hz", "effective_detune_hz", "vswr", "mismatch_loss_db",
                 "fade_db", "snr_db", "rssi_dbm", "error_probability", "errored")}
        samples = PacketLog(tx_gain_dbi=np.zeros(len(samples)), **cols)
    n = len(samples)
    if n == 0:
        raise AggregationError("empty sample stream")
    r = samples.rssi_dbm if rssi is None else np.asarray(rssi, dtype=float)
    lo, hi = np.percentile(r, RSSI_PERCENTILES)
    errored = int(np.count_nonzero(samples.errored))
    return RunMetrics(
        per=errored / n,
        packets_total=n,
        packets_errored=errored,
        rssi_p95_range_db=float(max(hi - lo, 0.0)),
        rssi_std_db=float(np.std(r)),
        vswr_mean=float(np.mean(samples.vswr)),
        vswr_max=float(np.max(samples.vswr)),
        mean_effective_detune_hz=float(np.mean(np.abs(samples.effective_detune_hz))),
        actuator_trace=list(actuator_trace or []),
    )


def _event_times(duration, rate):
    n = int(math.floor(duration * rate + 1e-9)) + 1
    return np.arange(n) / rate


def _drive_loop(controller, actuator, track_c, tick_t, packet_t, trace):
    """Interleave controller ticks and packet instants in time order; returns
    the actuator pitch offset (mm) and tilt (rad) at each packet."""
    pitch = np.zeros(packet_t.size)
    tilt = np.zeros((packet_t.size, 2))
    j = 0
    n_tick = tick_t.size
    for i in range(n_tick):
        t = tick_t[i]
        t_next = tick_t[i + 1] if i + 1 < n_tick else math.inf
        # packets strictly before this tick were handled in the previous slot
        actuator.advance_to(t)
        controller.tick(track_c.state(i), actuator, t)
        trace.append(actuator.trace_row())
        while j < packet_t.size and packet_t[j] < t_next:
            actuator.advance_to(max(packet_t[j], actuator.t))
            pitch[j] = actuator.pitch.actual[0]
            tilt[j] = actuator.tilt.actual
            j += 1
    return pitch, tilt


def run_scenario(cfg: ScenarioConfig, seed=None, table: CalibrationTable | None = None,
                 mode=None, keep_packets=True):
    """Simulate one run; a pure function of (config, seed, table).

    The flight is closed-form, so it is evaluated directly at the controller
    and packet instants. Packets and ticks are interleaved in time order; the
    channel, antenna and error draws are then evaluated for all packets.
    """
    if not isinstance(cfg, ScenarioConfig):
        raise ConfigurationError("run_scenario needs a ScenarioConfig")
    seed = cfg.run.seed if seed is None else int(seed)
    mode = ControlMode(mode) if mode is not None else cfg.mode
    profile = cfg.flight_profile()
    env = cfg.channel_environment()
    rf = cfg.rf_config()
    f0 = rf.carrier_hz
    geom = cfg.geometry()
    cal = TuningSensitivity(s_ref_m=geom.pitch_spacing_m, f0_hz=f0)
    rx = default_receiver(profile, cfg.receiver.offset_m, cfg.receiver.height_m)
    ctrl_cfg = cfg.controller_config()
    ctrl_cfg = ControllerConfig(ctrl_cfg.tick_rate_hz, ctrl_cfg.prediction_horizon_s, mode)
    if mode is ControlMode.TUNED and table is None:
        table = build_calibration_table(f0_hz=f0)

    root = np.random.default_rng(seed)
    fading_rng, shadow_rng, act_rng, err_rng = root.spawn(4)

    duration = profile.duration_s
    packet_t = _event_times(duration, rf.packet_rate_hz)
    tick_t = _event_times(duration, ctrl_cfg.tick_rate_hz)
    track_p = sample_track(profile, packet_t)
    track_c = sample_track(profile, tick_t)

    actuator = Actuator(act_rng, ActuatorConfig())
    controller = Controller(ctrl_cfg, table, rx, f0)
    trace = []
    pitch_mm, tilt = _drive_loop(controller, actuator, track_c, tick_t, packet_t, trace)

    # channel
    v_r = radial_velocity(track_p.velocity, track_p.position, rx)
    speed = np.linalg.norm(track_p.velocity, axis=1)
    doppler = f0 * v_r / SPEED_OF_LIGHT
    spread = f0 * speed / SPEED_OF_LIGHT + env.ambient_doppler_hz
    fading = FadingProcess(env, fading_rng)
    small = fading.fade_db(cumulative_trapezoid(spread, packet_t, initial=0.0),
                           cumulative_trapezoid(doppler, packet_t, initial=0.0))
    shadow = ShadowingProcess(env, shadow_rng).trace(cumulative_trapezoid(speed, packet_t, initial=0.0))
    fade = small + shadow
    pl = path_loss_db(slant_range(track_p.position, rx), env, f0)

    # antenna
    f_res = resonant_frequency_array(geom.diameter_m, geom.pitch_spacing_m + pitch_mm * 1e-3, cal)
    detune = doppler - (f_res - f0)
    vswr = vswr_curve(detune)
    mm = mismatch_loss_db(vswr)
    gain = axial_gain_dbi(geom.diameter_m, geom.pitch_spacing_m + pitch_mm * 1e-3, geom.turns,
                          SPEED_OF_LIGHT / f0)
    gain = gain + gain_pattern_db(off_axis_angle(track_p.roll + tilt[:, 0], track_p.pitch + tilt[:, 1]))

    snr = effective_snr_db(rf, gain, pl, fade, mm)
    rssi = rssi_dbm(rf, gain, pl, fade, mm)
    p = packet_error_probability(snr, detune, rf)
    errored = draw_errors(p, err_rng)

    packets = PacketLog(packet_t, doppler, detune, vswr, mm, gain, fade, snr, rssi, p, errored)
    window = packet_t >= profile.measure_start_s - 1e-9
    measured = packets.select(window)
    rssi_rep = reported_rssi(measured, max(1, int(round(cfg.run.rssi_window_s * rf.packet_rate_hz))),
                             detrend_path_loss=pl[window])
    metrics = aggregate(measured, rssi=rssi_rep, actuator_trace=trace)
    return RunResult(seed, metrics, packets if keep_packets else None, controller.decisions)


def _run_cell(args):
    cfg, seed, table, mode, key = args
    res = run_scenario(cfg, seed, table, mode, keep_packets=False)
    m = res.metrics
    m.actuator_trace = []
    return key, m


def worker_count():
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def run_many(jobs, workers=None):
    """Execute (cfg, seed, table, mode, key) jobs; results sorted by key."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        out = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            out = list(pool.map(_run_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return sorted(out, key=lambda kv: kv[0])


@dataclass
class SweepRow:
    speed_mph: float
    mode: str
    env: str
    n_runs: int
    per_mean: float
    per_std: float
    vswr_mean: float
    vswr_max: float
    rssi_p95_range_db: float
    rssi_std_db: float
    mean_detune_hz: float


SWEEP_COLUMNS = tuple(SweepRow.__dataclass_fields__)


@dataclass
class SweepResult:
    rows: list
    runs: dict  # (speed, mode) -> list of RunMetrics, run order
    seeds: dict  # (speed, mode) -> list of run seeds, run order
    regression: dict  # mode -> ascending polynomial coefficients
    comparisons: dict  # speed -> (t statistic, p value)

    def row(self, speed_mph, mode):
        for r in self.rows:
            if r.speed_mph == speed_mph and r.mode == ControlMode(mode).value:
                return r
        raise KeyError((speed_mph, mode))


def _summarise(speed, mode, env, runs):
    per = np.array([m.per for m in runs])
    return SweepRow(
        speed_mph=float(speed), mode=mode.value, env=env, n_runs=len(runs),
        per_mean=float(per.mean()),
        per_std=float(per.std(ddof=1)) if len(runs) > 1 else 0.0,
        vswr_mean=float(np.mean([m.vswr_mean for m in runs])),
        vswr_max=float(np.max([m.vswr_max for m in runs])),
        rssi_p95_range_db=float(np.mean([m.rssi_p95_range_db for m in runs])),
        rssi_std_db=float(np.mean([m.rssi_std_db for m in runs])),
        mean_detune_hz=float(np.mean([m.mean_effective_detune_hz for m in runs])),
    )


def speed_sweep(speeds_mph=DEFAULT_SPEEDS_MPH, n_runs=30, modes=MODES, env=None, base_seed=0,
                cfg=None, table=None, workers=None, degree=2, seed_modes=None):
    """Monte Carlo PER/VSWR/RSSI versus speed for each control mode.

    ``seed_modes`` maps each mode to the mode index used for seed derivation
    (defaults to its position in MODES); passing the same index for two
    modes feeds them identical seeds.
    """
    if n_runs < 1:
        raise ConfigurationError("n_runs must be >= 1")
    cfg = cfg or urban_sprint_conditions()
    if env is not None:
        cfg = cfg.with_overrides(environment={"kind": str(getattr(env, "value", env))})
    modes = [ControlMode(m) for m in modes]
    if ControlMode.TUNED in modes and table is None:
        table = build_calibration_table(f0_hz=cfg.carrier_hz)
    env_name = cfg.channel_environment().kind.value
    speeds = sorted(float(s) for s in speeds_mph)
    seed_modes = seed_modes or {}

    jobs, seeds = [], {}
    for si, speed in enumerate(speeds):
        c = cfg.with_overrides(profile={"speed_mph": speed})
        for mode in modes:
            mi = seed_modes.get(mode, MODES.index(mode))
            for ri in range(n_runs):
                seed = derive_seed(base_seed, si, mi, ri)
                seeds.setdefault((speed, mode), []).append(seed)
                jobs.append((c, seed, table, mode, (si, MODES.index(mode), ri)))
    results = run_many(jobs, workers)

    runs = {}
    for (si, mi, _), m in results:
        runs.setdefault((speeds[si], MODES[mi]), []).append(m)

    rows = [_summarise(speed, mode, env_name, runs[(speed, mode)])
            for speed in speeds for mode in sorted(modes, key=MODES.index)]
    regression = {}
    if len(speeds) > degree:
        for mode in modes:
            regression[mode.value] = polynomial_fit(
                speeds, [np.mean([m.per for m in runs[(s, mode)]]) for s in speeds],
                degree)
    comparisons = {}
    if ControlMode.STATIC in modes and ControlMode.TUNED in modes and n_runs >= 2:
        for s in speeds:
            comparisons[s] = compare_modes([m.per for m in runs[(s, ControlMode.STATIC)]],
                                           [m.per for m in runs[(s, ControlMode.TUNED)]])
    return SweepResult(rows, runs, seeds, regression, comparisons)


# bench emulator

def steady_residual_detune(offset_hz, f0_hz=None, seed=0, table=None, duration_s=2.0,
                           settle_s=1.0, rate_hz=250.0):
    """Mean |effective detune| once the closed loop has settled against a
    constant Doppler of ``offset_hz`` (equivalent steady radial speed)."""
    f0 = f0_hz or F0_HZ
    table = table or build_calibration_table(f0_hz=f0)
    v = offset_hz * SPEED_OF_LIGHT / f0
    far = 1e7  # receiver far ahead, so the line of sight stays on the velocity axis
    rx = np.array([far, 0.0, 0.0])
    actuator = Actuator(np.random.default_rng(seed))
    controller = Controller(ControllerConfig(), table, rx, f0)
    tick_t = _event_times(duration_s, controller.config.tick_rate_hz)
    packet_t = _event_times(duration_s, rate_hz)

    class _Track:
        def state(self, i):
            t = float(tick_t[i])
            return FlightState(t, np.array([v * t, 0.0, 0.0]), np.array([v, 0.0, 0.0]),
                               (0.0, 0.0, 0.0), 0.0)

    pitch, _ = _drive_loop(controller, actuator, _Track(), tick_t, packet_t, [])
    retune = reference_sensitivity(f0).hz_per_m * pitch * 1e-3
    detune = np.abs(offset_hz - retune)
    return float(np.mean(detune[packet_t >= settle_s]))


@dataclass
class BenchRow:
    offset_hz: float
    mode: str
    snr_db: float
    n_packets: int
    effective_detune_hz: float
    per: float


BENCH_COLUMNS = tuple(BenchRow.__dataclass_fields__)


def bench_doppler(offsets_hz=DEFAULT_BENCH_OFFSETS_HZ, snr_db=BENCH_SNR_DB, modes=MODES,
                  n_packets=10_000, seed=0, rf=None, table=None):
    """Fixed-SNR packet test against a constant injected Doppler offset.

    No flight, fading or mismatch: static mode sees the full offset, tuned
    mode the closed loop's steady-state residual.
    """
    if n_packets < 1000:
        raise ConfigurationError("bench needs at least 1000 packets")
    rf = rf or default_rf_config()
    modes = [ControlMode(m) for m in modes]
    rows = []
    for oi, off in enumerate(sorted(float(o) for o in offsets_hz)):
        for mode in sorted(modes, key=MODES.index):
            mi = MODES.index(mode)
            if mode is ControlMode.STATIC:
                det = abs(off)
            else:
                det = steady_residual_detune(off, rf.carrier_hz, derive_seed(seed, oi, mi, 1), table)
            p = packet_error_probability(snr_db, det, rf)
            err = draw_errors(np.full(n_packets, p), np.random.default_rng(derive_seed(seed, oi, mi, 0)))
            rows.append(BenchRow(off, mode.value, float(snr_db), n_packets, det,
                                 float(np.count_nonzero(err)) / n_packets))
    return rows


# Calibrated link budget shared by the flight scenarios: a 1 W transmitter
# into a directional ground antenna, 500 m down range in the urban preset.
FLIGHT_RF = {"tx_power_dbm": 30.0, "rx_gain_dbi": 13.25}

CIRCUIT_SPEED_MPS = 35.0
CIRCUIT_BANK_DEG = 56.0
CIRCUIT_STRAIGHT_M = 1000.0


def urban_sprint_conditions(speed_mph=180.0, mode="tuned", env="urban"):
    """Head-on sprint used for the speed sweep; statistics cover the cruise leg."""
    return ScenarioConfig().with_overrides(
        profile={"kind": "sprint", "speed_mph": float(speed_mph)},
        environment={"kind": env},
        rf=dict(FLIGHT_RF),
        controller={"mode": mode},
    )


def urban_circuit_conditions(mode="tuned", speed_mps=CIRCUIT_SPEED_MPS, bank_deg=CIRCUIT_BANK_DEG,
                             straight_m=CIRCUIT_STRAIGHT_M):
    """One lap of a long oval flown in coordinated turns at ``bank_deg``."""
    radius = speed_mps**2 / (G0 * math.tan(math.radians(bank_deg)))
    return ScenarioConfig().with_overrides(
        profile={"kind": "circuit", "speed_mph": speed_mps / MPH_TO_MPS, "turn_radius_m": radius,
                 "straight_m": straight_m},
        environment={"kind": "urban"},
        rf=dict(FLIGHT_RF),
        controller={"mode": mode},
    )
