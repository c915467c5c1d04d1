"""Doppler-aware link simulator for a mechanically tunable helical antenna
on a fast-moving drone."""

__version__ = "0.1.0"

from .antenna import (HelixGeometry, gain_pattern_db, mismatch_loss_db, reference_geometry,
                      resonant_frequency, vswr_at_detuning)
from .channel import ChannelEnvironment, doppler_shift, environment, fading_sample_db, path_loss_db
from .config import ScenarioConfig, load_config, parse_config
from .control import (CalibrationTable, ControllerConfig, build_calibration_table, predict_doppler,
                      select_tuning, steer_beam)
from .engine import (RunMetrics, SweepResult, aggregate, bench_doppler, urban_sprint_conditions,
                     run_scenario, speed_sweep, urban_circuit_conditions)
from .flight import FlightProfile, FlightState, circuit_profile, sample, sprint_profile
from .link import RfConfig, fit_beta_and_scale, packet_error_probability
from .stats import anova, compare_modes, polynomial_fit

__all__ = [
    "CalibrationTable", "ChannelEnvironment", "ControllerConfig", "FlightProfile", "FlightState",
    "HelixGeometry", "RfConfig", "RunMetrics", "ScenarioConfig", "SweepResult", "aggregate", "anova",
    "bench_doppler", "build_calibration_table", "circuit_profile", "compare_modes", "doppler_shift",
    "environment", "fading_sample_db", "fit_beta_and_scale", "gain_pattern_db", "load_config",
    "mismatch_loss_db", "packet_error_probability", "urban_sprint_conditions", "parse_config", "path_loss_db",
    "polynomial_fit", "predict_doppler", "reference_geometry", "resonant_frequency", "run_scenario",
    "sample", "select_tuning", "speed_sweep", "sprint_profile", "steer_beam",
    "urban_circuit_conditions", "vswr_at_detuning",
]
