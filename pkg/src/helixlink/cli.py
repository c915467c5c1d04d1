"""Command-line entry point: calibrate, run, sweep, bench, report.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ScenarioConfig, config_hash, load_config, parse_config
from .control import DECISION_COLUMNS, ControlMode, build_calibration_table
from .actuation import TRACE_COLUMNS
from .engine import (BENCH_COLUMNS, DEFAULT_BENCH_OFFSETS_HZ, DEFAULT_SPEEDS_MPH, METRIC_COLUMNS, MODES,
                     PACKET_COLUMNS, SWEEP_COLUMNS, bench_doppler, run_scenario, speed_sweep)
from .errors import ConfigurationError, HelixLinkError
from .output import (file_digest, header_lines, read_calibration, rows_of, write_calibration,
                     write_table)
from .stats import anova

log = logging.getLogger("helixlink")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

RUN_COLUMNS = ("mode", "env", "seed") + METRIC_COLUMNS
SWEEP_RUN_COLUMNS = ("speed_mph", "mode", "env", "run_index", "seed") + METRIC_COLUMNS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario file (INI sections)")
    common.add_argument("--seed", type=_u64, help="base seed (unsigned 64-bit)")
    common.add_argument("--runs", type=_positive_int, help="runs per (speed, mode) cell")
    common.add_argument("--mode", choices=("static", "tuned", "both"))
    common.add_argument("--env", choices=("open", "open_field", "suburban", "urban"))
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=("csv", "records"), dest="fmt")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="helixlink", description="Doppler-aware helix link simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("calibrate", parents=[common], help="write the pitch lookup table")
    sub.add_parser("run", parents=[common], help="simulate one run per selected mode")
    sw = sub.add_parser("sweep", parents=[common], help="Monte Carlo PER versus speed")
    sw.add_argument("--speeds", type=float, nargs="+", metavar="MPH", default=list(DEFAULT_SPEEDS_MPH))
    sw.add_argument("--degree", type=int, default=2, help="regression degree")
    b = sub.add_parser("bench", parents=[common], help="fixed-SNR Doppler offset table")
    b.add_argument("--offsets", type=float, nargs="+", metavar="HZ", default=list(DEFAULT_BENCH_OFFSETS_HZ))
    b.add_argument("--snr", type=float, default=12.0, help="bench SNR in dB")
    b.add_argument("--packets", type=int, default=10_000)
    sub.add_parser("report", parents=[common], help="re-aggregate outputs into plot data and figures")
    return p


def resolve_config(args):
    cfg = load_config(args.config) if args.config else parse_config("")
    over = {}
    if args.seed is not None:
        over["run"] = {"seed": args.seed}
    if args.runs is not None:
        over.setdefault("run", {})["runs"] = args.runs
    if args.env is not None:
        over["environment"] = {"kind": args.env}
    if args.mode in ("static", "tuned"):
        over["controller"] = {"mode": args.mode}
    out = {}
    if args.out is not None:
        out["dir"] = args.out
    if args.fmt is not None:
        out["format"] = args.fmt
    if out:
        over["output"] = out
    return cfg.with_overrides(**over) if over else cfg


def selected_modes(args, cfg, default_both=False):
    if args.mode == "both" or (args.mode is None and default_both):
        return list(MODES)
    return [cfg.mode]


def table_path(cfg):
    p = cfg.output.calibration_table
    return p if os.path.isabs(p) else os.path.join(cfg.output.dir, p)


def _meta(cfg, seed, **extra):
    return header_lines(seed, config_hash(cfg), extra)


def cmd_calibrate(args, cfg):
    table = build_calibration_table(f0_hz=cfg.carrier_hz)
    path = write_calibration(table_path(cfg), table, _meta(cfg, cfg.run.seed))
    log.info("wrote %d calibration entries to %s", len(table.entries), path)
    return [path]


def _load_table(cfg, modes):
    if ControlMode.TUNED not in modes:
        return None, {}
    path = table_path(cfg)
    table = read_calibration(path)
    if not table.covers(cfg.carrier_hz):
        raise ConfigurationError(f"{path} does not cover the carrier +/- 1 kHz; recalibrate")
    # the configured name, not the resolved path, keeps headers independent of --out
    return table, {"calibration_table": f"{cfg.output.calibration_table} sha256:{file_digest(path)}"}


def cmd_run(args, cfg):
    modes = selected_modes(args, cfg)
    table, ref = _load_table(cfg, modes)
    if ref:
        log.info("using calibration table %s", ref["calibration_table"])
    seed, fmt, out = cfg.run.seed, cfg.output.format, cfg.output.dir
    env = cfg.channel_environment().kind.value
    rows, written = [], []
    for mode in modes:
        res = run_scenario(cfg, seed, table, mode)
        rows.append([mode.value, env, seed] + [getattr(res.metrics, c) for c in METRIC_COLUMNS])
        meta = _meta(cfg, seed, mode=mode.value, **ref)
        written.append(write_table(os.path.join(out, f"actuator_trace_{mode.value}.csv"), TRACE_COLUMNS,
                                   res.metrics.actuator_trace, meta, fmt))
        pk = res.packets
        written.append(write_table(os.path.join(out, f"packets_{mode.value}.csv"), PACKET_COLUMNS,
                                   zip(*(getattr(pk, c) for c in PACKET_COLUMNS)), meta, fmt))
        drows = [(d.t_s, d.predicted_doppler_hz, d.horizon_s, d.pitch_mm, d.tilt_rad[0], d.tilt_rad[1],
                  d.submitted_pitch, d.submitted_tilt, d.clamped) for d in res.decisions]
        written.append(write_table(os.path.join(out, f"decisions_{mode.value}.csv"), DECISION_COLUMNS,
                                   drows, meta, fmt))
    written.insert(0, write_table(os.path.join(out, "run_metrics.csv"), RUN_COLUMNS, rows,
                                  _meta(cfg, seed, **ref), fmt))
    return written


def cmd_sweep(args, cfg):
    modes = selected_modes(args, cfg, default_both=True)
    table, ref = _load_table(cfg, modes)
    seed, fmt, out = cfg.run.seed, cfg.output.format, cfg.output.dir
    res = speed_sweep(args.speeds, cfg.run.runs, modes, None, seed, cfg=cfg, table=table,
                      degree=args.degree)
    meta = _meta(cfg, seed, **ref)
    written = [write_table(os.path.join(out, "sweep.csv"), SWEEP_COLUMNS, rows_of(res.rows, SWEEP_COLUMNS),
                           meta, fmt)]
    env = cfg.channel_environment().kind.value
    run_rows = []
    for (speed, mode), metrics in sorted(res.runs.items(), key=lambda kv: (kv[0][0], MODES.index(kv[0][1]))):
        for ri, (m, s) in enumerate(zip(metrics, res.seeds[(speed, mode)])):
            run_rows.append([speed, mode.value, env, ri, s] + [getattr(m, c) for c in METRIC_COLUMNS])
    written.append(write_table(os.path.join(out, "sweep_runs.csv"), SWEEP_RUN_COLUMNS, run_rows, meta, fmt))

    coef_cols = ("mode", "degree") + tuple(f"c{i}" for i in range(args.degree + 1))
    reg_rows = [[m, args.degree] + list(c) for m, c in sorted(res.regression.items())]
    written.append(write_table(os.path.join(out, "regression.csv"), coef_cols, reg_rows, meta, fmt))
    cmp_rows = [[s, t, p] for s, (t, p) in sorted(res.comparisons.items())]
    written.append(write_table(os.path.join(out, "comparisons.csv"), ("speed_mph", "t_statistic", "p_value"),
                               cmp_rows, meta, fmt))
    an_rows = []
    speeds = sorted({s for s, _ in res.runs})
    for mode in sorted(modes, key=MODES.index):
        if len(speeds) >= 2 and cfg.run.runs >= 2:
            f, p = anova([[m.per for m in res.runs[(s, mode)]] for s in speeds])
            an_rows.append([mode.value, f, p])
    written.append(write_table(os.path.join(out, "anova.csv"), ("mode", "f_statistic", "p_value"),
                               an_rows, meta, fmt))
    return written


def cmd_bench(args, cfg):
    modes = selected_modes(args, cfg, default_both=True)
    table, ref = None, {}
    if ControlMode.TUNED in modes and os.path.exists(table_path(cfg)):
        table, ref = _load_table(cfg, modes)
    if args.packets < 1000:
        raise ConfigurationError("--packets must be >= 1000")
    rows = bench_doppler(args.offsets, args.snr, modes, args.packets, cfg.run.seed, cfg.rf_config(), table)
    return [write_table(os.path.join(cfg.output.dir, "bench.csv"), BENCH_COLUMNS, rows_of(rows, BENCH_COLUMNS),
                        _meta(cfg, cfg.run.seed, **ref), cfg.output.format)]


def cmd_report(args, cfg):
    from .report import build_report
    return build_report(cfg.output.dir, _meta(cfg, cfg.run.seed), cfg.output.format)


COMMANDS = {"calibrate": cmd_calibrate, "run": cmd_run, "sweep": cmd_sweep, "bench": cmd_bench,
            "report": cmd_report}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        paths = COMMANDS[args.command](args, cfg)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (HelixLinkError, OSError, ValueError, ArithmeticError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
